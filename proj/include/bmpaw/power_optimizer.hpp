// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>

#include "bmpaw/core_model.hpp"
#include "bmpaw/kernels.hpp"

namespace bmpaw::opt {

/// The infiltration program can maximize either the withholding total net of
/// bribes paid, or the system reward with bribes excluded.
enum class Objective { NetOfBribes, ExcludingBribes };

std::string_view to_string(Objective objective);
Objective objective_from_string(std::string_view name);

struct SolverConfig {
    Objective objective = Objective::NetOfBribes;
    double grad_tol = 1e-8;
    int max_iterations = 400;
    bool cross_check_oracle = true;
    int oracle_resolution = 201;
    kernels::Backend backend = kernels::Backend::Auto;
};

struct OptimizationResult {
    double r1_hat = 0.0;
    double r2_hat = 0.0;
    double reward_at_opt = 0.0;
    double kkt_residual = 0.0;
    double oracle_gap = 0.0;
    std::string method;
    bool converged = false;
};

/// Objective value at a point; the r fields of `params` are ignored.
double objective_value(const PowerProfile& profile, const AttackParams& params,
                       Objective objective, double r1, double r2);

/// Gradient from the forward-mode path (exact for the rational objective).
std::array<double, 2> objective_gradient(const PowerProfile& profile,
                                         const AttackParams& params, Objective objective,
                                         double r1, double r2);

/// Central finite differences, step 1e-6; one-sided at the box boundary.
std::array<double, 2> objective_gradient_fd(const PowerProfile& profile,
                                            const AttackParams& params, Objective objective,
                                            double r1, double r2);

/// Multi-start projected gradient ascent refined to `grad_tol`, cross-checked
/// against the grid oracle. Falls back to the oracle point when a start
/// fails to converge past it.
OptimizationResult optimize_infiltration(const PowerProfile& profile, const AttackParams& params,
                                         const SolverConfig& config = {});

/// Exhaustive reference over a uniform grid, ties broken toward smaller
/// (r1, r2) lexicographically.
OptimizationResult grid_oracle(const PowerProfile& profile, const AttackParams& params,
                               Objective objective, int resolution,
                               kernels::Backend backend = kernels::Backend::Auto);

/// First-order optimality report at a point of the box. Multipliers come
/// from the componentwise nonnegative least-squares fit (box constraints
/// decouple), gradients from finite differences.
struct KktReport {
    std::array<double, 2> gradient{};       // of the negated objective
    std::array<double, 4> multipliers{};    // -r1<=0, r1-1<=0, -r2<=0, r2-1<=0
    double stationarity = 0.0;
    double complementarity = 0.0;
    double dual_violation = 0.0;
    double primal_violation = 0.0;
    double max_residual() const;
};

KktReport kkt_residuals(const PowerProfile& profile, const AttackParams& params,
                        Objective objective, double r1, double r2);

/// Finite-difference Hessian eigenvalues of the negated objective, for
/// auditing curvature claims rather than assuming them.
std::array<double, 2> negated_hessian_eigenvalues(const PowerProfile& profile,
                                                  const AttackParams& params,
                                                  Objective objective, double r1, double r2);

}  // namespace bmpaw::opt
