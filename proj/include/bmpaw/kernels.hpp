// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>

#include "bmpaw/core_model.hpp"

namespace bmpaw::kernels {

/// Backend selection for the batched closed-form evaluators. Auto picks the
/// vector variant when the build carries one and the CPU supports it. Both
/// variants evaluate the same expression in the same operation order, so
/// their outputs agree bit for bit; the equivalence tests pin that down.
enum class Backend { Auto, Scalar, Simd };

bool simd_available();
Backend resolve_backend(Backend requested);
std::string_view backend_name(Backend backend);

/// Attacker objective for the infiltration program, evaluated over a row of
/// post-adjustment fractions at a fixed pre-adjustment fraction.
struct ObjectiveSpec {
    PowerProfile profile{};
    double gamma = 0.0;
    double eps1 = 0.0, eps2 = 0.0;
    RbarPolicy rbar_policy = RbarPolicy::Mean;
    double rbar_empirical = 0.0;
    bool exclude_bribes = false;
};

void attacker_objective_row(const ObjectiveSpec& spec, double r1, std::span<const double> r2,
                            std::span<double> out, Backend backend = Backend::Auto);

/// Attacker and target extra rewards over a bribe grid, row-major
/// out[i1 * eps2.size() + i2].
struct ExtraSpec {
    PowerProfile profile{};
    double r1 = 0.0, r2 = 0.0;
    double gamma = 0.0;
    RbarPolicy rbar_policy = RbarPolicy::Mean;
    double rbar_empirical = 0.0;
};

void extra_rewards_grid(const ExtraSpec& spec, std::span<const double> eps1,
                        std::span<const double> eps2, std::span<double> attacker_extra,
                        std::span<double> target_extra, Backend backend = Backend::Auto);

}  // namespace bmpaw::kernels
