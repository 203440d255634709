// SPDX-License-Identifier: Apache-2.0
#include "bmpaw/core_model.hpp"

#include <cmath>

#include "bmpaw/reward_math.hpp"

namespace bmpaw {

namespace {

void require(bool ok, const std::string& message)
{
    if (!ok) throw ModelError(message);
}

bool is_fraction(double x)
{
    return std::isfinite(x) && x >= 0.0 && x <= 1.0;
}

}  // namespace

std::string_view to_string(RbarPolicy policy)
{
    switch (policy) {
        case RbarPolicy::Mean: return "mean";
        case RbarPolicy::R1Only: return "r1_only";
        case RbarPolicy::R2Only: return "r2_only";
        case RbarPolicy::Empirical: return "empirical";
    }
    return "mean";
}

RbarPolicy rbar_policy_from_string(std::string_view name)
{
    if (name == "mean") return RbarPolicy::Mean;
    if (name == "r1_only") return RbarPolicy::R1Only;
    if (name == "r2_only") return RbarPolicy::R2Only;
    if (name == "empirical") return RbarPolicy::Empirical;
    throw ModelError("unknown rbar policy: " + std::string(name));
}

PowerProfile make_power_profile(double alpha, double beta, double eta)
{
    require(std::isfinite(alpha) && alpha > 0.0 && alpha < 0.5,
            "attacker power must lie in (0, 0.5); got " + std::to_string(alpha));
    require(std::isfinite(beta) && beta >= 0.0, "victim pool power must be >= 0");
    require(std::isfinite(eta) && eta >= 0.0, "target pool power must be >= 0");
    double delta = 1.0 - alpha - beta - eta;
    if (delta < 0.0 && delta >= -1e-12) delta = 0.0;  // boundary rounding
    require(delta >= 0.0, "powers exceed the unit total: alpha + beta + eta > 1");
    return PowerProfile{alpha, beta, eta, delta};
}

void validate(const AttackParams& params)
{
    require(is_fraction(params.r1), "r1 must lie in [0,1]");
    require(is_fraction(params.r2), "r2 must lie in [0,1]");
    require(is_fraction(params.gamma), "gamma must lie in [0,1]");
    require(is_fraction(params.eps1), "eps1 must lie in [0,1]");
    require(is_fraction(params.eps2), "eps2 must lie in [0,1]");
    if (params.rbar_policy == RbarPolicy::Empirical) {
        require(is_fraction(params.rbar_empirical),
                "empirical rbar policy requires a measured value in [0,1]");
    }
}

WinProbabilities win_probabilities(const PowerProfile& profile, const AttackParams& params)
{
    validate(params);
    const auto w = detail::win_probs(profile, params.gamma, params.r2);
    return WinProbabilities{w.c52, w.c54, w.c52d, w.c54d};
}

double effective_infiltration(const AttackParams& params)
{
    validate(params);
    return detail::rbar_value(params.rbar_policy, params.r1, params.r2, params.rbar_empirical);
}

}  // namespace bmpaw
