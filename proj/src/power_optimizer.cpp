// SPDX-License-Identifier: Apache-2.0
#include "bmpaw/power_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bmpaw/reward_math.hpp"

namespace bmpaw::opt {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kActiveTol = 1e-9;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

struct Point {
    double r1, r2;
};

double eval(const PowerProfile& p, const AttackParams& params, Objective objective, double r1,
            double r2)
{
    return detail::attacker_objective(p, params.gamma, params.eps1, params.eps2,
                                      params.rbar_policy, params.rbar_empirical,
                                      objective == Objective::ExcludingBribes, r1, r2);
}

std::array<double, 2> eval_grad(const PowerProfile& p, const AttackParams& params,
                                Objective objective, double r1, double r2)
{
    const Dual2 value = detail::attacker_objective(
        p, params.gamma, params.eps1, params.eps2, params.rbar_policy, params.rbar_empirical,
        objective == Objective::ExcludingBribes, Dual2::var_x(r1), Dual2::var_y(r2));
    return {value.dx, value.dy};
}

/// Gradient components that can still produce movement inside the box.
std::array<double, 2> projected_ascent_grad(Point x, std::array<double, 2> g)
{
    std::array<double, 2> pg = g;
    const double r[2] = {x.r1, x.r2};
    for (int i = 0; i < 2; ++i) {
        if (r[i] <= 0.0 && g[i] < 0.0) pg[i] = 0.0;
        if (r[i] >= 1.0 && g[i] > 0.0) pg[i] = 0.0;
    }
    return pg;
}

double inf_norm(std::array<double, 2> v) { return std::max(std::fabs(v[0]), std::fabs(v[1])); }

struct LocalResult {
    Point x;
    double value;
    double pg_norm;
    bool converged;
};

/// Projected gradient ascent with Barzilai-Borwein steps and backtracking.
LocalResult ascend(const PowerProfile& p, const AttackParams& params, Objective objective,
                   Point x0, double tol, int max_iter)
{
    Point x = {clamp01(x0.r1), clamp01(x0.r2)};
    double fx = eval(p, params, objective, x.r1, x.r2);
    auto g = eval_grad(p, params, objective, x.r1, x.r2);
    double step = 1.0;
    Point x_prev = x;
    std::array<double, 2> g_prev = g;
    bool have_prev = false;

    int it = 0;
    for (; it < max_iter; ++it) {
        const auto pg = projected_ascent_grad(x, g);
        if (inf_norm(pg) <= tol) break;

        if (have_prev) {
            const double s1 = x.r1 - x_prev.r1, s2 = x.r2 - x_prev.r2;
            const double y1 = g[0] - g_prev[0], y2 = g[1] - g_prev[1];
            const double sy = s1 * y1 + s2 * y2;
            const double ss = s1 * s1 + s2 * s2;
            // Ascent on a locally concave objective has s.y < 0.
            step = (sy < 0.0 && ss > 0.0) ? std::clamp(-ss / sy, 1e-8, 1e6) : 1.0;
        }

        bool moved = false;
        double trial_step = step;
        for (int back = 0; back < 60; ++back) {
            const Point cand = {clamp01(x.r1 + trial_step * g[0]),
                                clamp01(x.r2 + trial_step * g[1])};
            const double d1 = cand.r1 - x.r1, d2 = cand.r2 - x.r2;
            if (d1 == 0.0 && d2 == 0.0) break;
            const double f_cand = eval(p, params, objective, cand.r1, cand.r2);
            if (f_cand >= fx + 1e-4 * (g[0] * d1 + g[1] * d2)) {
                x_prev = x;
                g_prev = g;
                have_prev = true;
                x = cand;
                fx = f_cand;
                g = eval_grad(p, params, objective, x.r1, x.r2);
                moved = true;
                break;
            }
            trial_step *= 0.5;
        }
        if (!moved) break;
    }
    const double pgn = inf_norm(projected_ascent_grad(x, g));
    return {x, fx, pgn, pgn <= tol};
}

}  // namespace

std::string_view to_string(Objective objective)
{
    return objective == Objective::NetOfBribes ? "net_of_bribes" : "excluding_bribes";
}

Objective objective_from_string(std::string_view name)
{
    if (name == "net_of_bribes") return Objective::NetOfBribes;
    if (name == "excluding_bribes") return Objective::ExcludingBribes;
    throw ModelError("unknown objective: " + std::string(name));
}

double objective_value(const PowerProfile& profile, const AttackParams& params,
                       Objective objective, double r1, double r2)
{
    AttackParams checked = params;
    checked.r1 = r1;
    checked.r2 = r2;
    validate(checked);
    return eval(profile, params, objective, r1, r2);
}

std::array<double, 2> objective_gradient(const PowerProfile& profile, const AttackParams& params,
                                         Objective objective, double r1, double r2)
{
    return eval_grad(profile, params, objective, r1, r2);
}

std::array<double, 2> objective_gradient_fd(const PowerProfile& profile,
                                            const AttackParams& params, Objective objective,
                                            double r1, double r2)
{
    auto partial = [&](int axis, double v1, double v2) {
        double lo = axis == 0 ? v1 - kFdStep : v1;
        double hi = axis == 0 ? v1 + kFdStep : v1;
        double lo2 = axis == 1 ? v2 - kFdStep : v2;
        double hi2 = axis == 1 ? v2 + kFdStep : v2;
        double width = 2.0 * kFdStep;
        if ((axis == 0 && v1 < kFdStep) || (axis == 1 && v2 < kFdStep)) {
            lo = v1, lo2 = v2;  // forward difference at the lower edge
            width = kFdStep;
        } else if ((axis == 0 && v1 > 1.0 - kFdStep) || (axis == 1 && v2 > 1.0 - kFdStep)) {
            hi = v1, hi2 = v2;  // backward difference at the upper edge
            width = kFdStep;
        }
        return (eval(profile, params, objective, hi, hi2) -
                eval(profile, params, objective, lo, lo2)) /
               width;
    };
    return {partial(0, r1, r2), partial(1, r1, r2)};
}

OptimizationResult grid_oracle(const PowerProfile& profile, const AttackParams& params,
                               Objective objective, int resolution, kernels::Backend backend)
{
    if (resolution < 11) throw ModelError("grid oracle needs at least 11 points per axis");
    validate(params);

    kernels::ObjectiveSpec spec;
    spec.profile = profile;
    spec.gamma = params.gamma;
    spec.eps1 = params.eps1;
    spec.eps2 = params.eps2;
    spec.rbar_policy = params.rbar_policy;
    spec.rbar_empirical = params.rbar_empirical;
    spec.exclude_bribes = objective == Objective::ExcludingBribes;

    std::vector<double> axis(resolution);
    for (int i = 0; i < resolution; ++i) axis[i] = static_cast<double>(i) / (resolution - 1);
    std::vector<double> row(resolution);

    // Ties, including floating-point coincidences of algebraically equal
    // values, break toward smaller (r1, r2) in row-major order.
    constexpr double kTieTol = 1e-14;
    OptimizationResult best;
    best.reward_at_opt = -1.0;
    for (int i = 0; i < resolution; ++i) {
        kernels::attacker_objective_row(spec, axis[i], axis, row, backend);
        for (int j = 0; j < resolution; ++j) {
            if (row[j] > best.reward_at_opt + kTieTol) {
                best.reward_at_opt = row[j];
                best.r1_hat = axis[i];
                best.r2_hat = axis[j];
            }
        }
    }
    best.method = "grid_oracle";
    best.converged = true;
    best.kkt_residual =
        kkt_residuals(profile, params, objective, best.r1_hat, best.r2_hat).max_residual();
    return best;
}

OptimizationResult optimize_infiltration(const PowerProfile& profile, const AttackParams& params,
                                         const SolverConfig& config)
{
    validate(params);

    std::vector<Point> starts;
    for (double r1 : {0.25, 0.5, 0.75}) {
        for (double r2 : {0.25, 0.5, 0.75}) starts.push_back({r1, r2});
    }
    {
        // Seed one start from a coarse scan.
        const auto coarse = grid_oracle(profile, params, config.objective, 41, config.backend);
        starts.push_back({coarse.r1_hat, coarse.r2_hat});
    }

    LocalResult best{{0.0, 0.0}, eval(profile, params, config.objective, 0.0, 0.0), 0.0, false};
    bool any_converged = false;
    for (const auto& start : starts) {
        const auto local = ascend(profile, params, config.objective, start, config.grad_tol,
                                  config.max_iterations);
        any_converged = any_converged || local.converged;
        if (local.value > best.value) best = local;
    }

    OptimizationResult result;
    result.method = "multistart_projected_gradient";
    result.oracle_gap = 0.0;
    if (config.cross_check_oracle) {
        const auto oracle =
            grid_oracle(profile, params, config.objective, config.oracle_resolution,
                        config.backend);
        if (oracle.reward_at_opt > best.value) {
            const auto polished =
                ascend(profile, params, config.objective, {oracle.r1_hat, oracle.r2_hat},
                       config.grad_tol, config.max_iterations);
            if (polished.value > best.value) {
                best = polished;
                any_converged = any_converged || polished.converged;
            }
            if (oracle.reward_at_opt > best.value) {
                best = {{oracle.r1_hat, oracle.r2_hat}, oracle.reward_at_opt, 0.0, false};
                result.method = "grid_fallback";
            }
        }
        result.oracle_gap = std::fabs(best.value - oracle.reward_at_opt);
    }

    result.r1_hat = best.x.r1;
    result.r2_hat = best.x.r2;
    result.reward_at_opt = best.value;
    result.converged = any_converged;
    result.kkt_residual =
        kkt_residuals(profile, params, config.objective, best.x.r1, best.x.r2).max_residual();
    return result;
}

double KktReport::max_residual() const
{
    return std::max({stationarity, complementarity, dual_violation, primal_violation});
}

KktReport kkt_residuals(const PowerProfile& profile, const AttackParams& params,
                        Objective objective, double r1, double r2)
{
    KktReport report;
    const auto grad_obj = objective_gradient_fd(profile, params, objective, r1, r2);
    // Work with the minimization form.
    report.gradient = {-grad_obj[0], -grad_obj[1]};

    const double x[2] = {r1, r2};
    const double g_con[4] = {-r1, r1 - 1.0, -r2, r2 - 1.0};
    double stationarity = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
        const bool lower = std::fabs(x[axis]) <= kActiveTol;
        const bool upper = std::fabs(x[axis] - 1.0) <= kActiveTol;
        const double gf = report.gradient[axis];
        double residual = gf;
        if (lower) {
            // gradient of -x is -1: mu = gf when nonnegative
            const double mu = std::max(gf, 0.0);
            report.multipliers[axis * 2] = mu;
            residual = gf - mu;
        } else if (upper) {
            const double mu = std::max(-gf, 0.0);
            report.multipliers[axis * 2 + 1] = mu;
            residual = gf + mu;
        }
        stationarity = std::max(stationarity, std::fabs(residual));
    }
    report.stationarity = stationarity;
    for (int i = 0; i < 4; ++i) {
        report.complementarity =
            std::max(report.complementarity, std::fabs(report.multipliers[i] * g_con[i]));
        report.dual_violation = std::max(report.dual_violation, -report.multipliers[i]);
        report.primal_violation = std::max(report.primal_violation, g_con[i]);
    }
    report.dual_violation = std::max(report.dual_violation, 0.0);
    report.primal_violation = std::max(report.primal_violation, 0.0);
    return report;
}

std::array<double, 2> negated_hessian_eigenvalues(const PowerProfile& profile,
                                                  const AttackParams& params,
                                                  Objective objective, double r1, double r2)
{
    const double h = 1e-5;
    auto grad = [&](double a, double b) {
        return eval_grad(profile, params, objective, clamp01(a), clamp01(b));
    };
    const auto gx_hi = grad(r1 + h, r2), gx_lo = grad(r1 - h, r2);
    const auto gy_hi = grad(r1, r2 + h), gy_lo = grad(r1, r2 - h);
    // Hessian of the negated objective.
    const double hxx = -(gx_hi[0] - gx_lo[0]) / (2 * h);
    const double hxy = -(gx_hi[1] - gx_lo[1]) / (2 * h);
    const double hyx = -(gy_hi[0] - gy_lo[0]) / (2 * h);
    const double hyy = -(gy_hi[1] - gy_lo[1]) / (2 * h);
    const double off = 0.5 * (hxy + hyx);
    const double mean = 0.5 * (hxx + hyy);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (hxx - hyy) * (hxx - hyy) + off * off));
    return {mean - disc, mean + disc};
}

}  // namespace bmpaw::opt
