// SPDX-License-Identifier: Apache-2.0
#include "bmpaw/bribe_pricing.hpp"

#include <algorithm>
#include <cmath>

namespace bmpaw::pricing {

namespace {

struct LinearForm {
    double a1, a2;  // coefficients of eps1, eps2
    double ceiling;
    double floor;
};

LinearForm linear_form(const PowerProfile& profile, const AttackParams& params)
{
    const auto c = win_probabilities(profile, params);
    LinearForm f{};
    f.a1 = profile.delta * c.c52;
    f.a2 = profile.eta * c.c54;
    f.ceiling = profile.delta * (c.c52 - c.c52d) + profile.eta * (c.c54 - c.c54d);
    const double rbar = effective_infiltration(params);
    const double infil = rbar * profile.alpha;
    if (infil <= 0.0) {
        throw ModelError("bribe pricing undefined without infiltration (rbar * alpha = 0)");
    }
    f.floor = profile.eta * (1.0 - c.c54d) * (infil + profile.beta) / infil;
    return f;
}

/// Point on the line a1*x + a2*y = level inside [0,1]^2, preferring x = y.
/// Returns false if the line misses the box.
bool point_on_level(double a1, double a2, double level, std::pair<double, double>& out)
{
    const double total = a1 + a2;
    if (total <= 0.0) return false;
    const double t = level / total;
    if (t >= 0.0 && t <= 1.0) {
        out = {t, t};
        return true;
    }
    if (a1 > 0.0) {
        const double e2 = a2 > 0.0 ? (level - a1) / a2 : -1.0;
        if (level <= a1 && level >= 0.0 && a2 == 0.0) {
            out = {level / a1, 0.0};
            return true;
        }
        if (e2 >= 0.0 && e2 <= 1.0) {
            out = {1.0, e2};
            return true;
        }
    }
    if (a2 > 0.0) {
        const double e1 = a1 > 0.0 ? (level - a2) / a1 : -1.0;
        if (level <= a2 && level >= 0.0 && a1 == 0.0) {
            out = {0.0, level / a2};
            return true;
        }
        if (e1 >= 0.0 && e1 <= 1.0) {
            out = {e1, 1.0};
            return true;
        }
    }
    return false;
}

}  // namespace

double attacker_ceiling(const PowerProfile& profile, const AttackParams& params)
{
    const auto c = win_probabilities(profile, params);
    return profile.delta * (c.c52 - c.c52d) + profile.eta * (c.c54 - c.c54d);
}

double target_floor(const PowerProfile& profile, const AttackParams& params)
{
    return linear_form(profile, params).floor;
}

BribeRegion feasible_bribe_region(const PowerProfile& profile, const AttackParams& params,
                                  int n_samples)
{
    const auto f = linear_form(profile, params);
    BribeRegion region;
    region.a1 = f.a1;
    region.a2 = f.a2;
    region.ceiling = f.ceiling;
    region.floor = f.floor;
    region.feasible = f.floor < f.ceiling;

    const double box_max = f.a1 + f.a2;  // level at (1,1)
    const double hi = std::min(f.ceiling, box_max);
    region.reachable = region.feasible && f.floor < hi && box_max > 0.0;
    if (!region.reachable) return region;

    region.sample_points.reserve(static_cast<std::size_t>(std::max(n_samples, 0)));
    for (int k = 1; k <= n_samples; ++k) {
        const double level = f.floor + (hi - f.floor) * k / (n_samples + 1.0);
        std::pair<double, double> pt;
        if (point_on_level(f.a1, f.a2, level, pt)) region.sample_points.push_back(pt);
    }
    return region;
}

std::pair<double, double> minimum_eps(const PowerProfile& profile, const AttackParams& params)
{
    const auto f = linear_form(profile, params);
    if (!(f.floor < f.ceiling)) {
        throw ModelError("no workable bribe price: target floor meets attacker ceiling");
    }
    std::pair<double, double> pt;
    if (!point_on_level(f.a1, f.a2, f.floor, pt)) {
        throw ModelError("target floor lies outside the unit bribe box");
    }
    return pt;
}

std::pair<double, double> maximum_eps(const PowerProfile& profile, const AttackParams& params)
{
    const auto f = linear_form(profile, params);
    if (!(f.floor < f.ceiling)) {
        throw ModelError("no workable bribe price: target floor meets attacker ceiling");
    }
    std::pair<double, double> pt;
    if (point_on_level(f.a1, f.a2, f.ceiling, pt)) return pt;
    // Ceiling line beyond the box corner: the attacker-side constraint is
    // slack everywhere, so the largest payable bribe is the corner itself.
    if (f.ceiling > f.a1 + f.a2) return {1.0, 1.0};
    throw ModelError("attacker ceiling lies outside the unit bribe box");
}

}  // namespace bmpaw::pricing
