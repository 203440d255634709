// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

namespace bmpaw::stats {

inline constexpr double kZ99TwoSided = 2.5758293035489004;  // 99% two-sided normal
inline constexpr double kZ99OneSided = 2.3263478740408408;  // 99% one-sided normal

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_pvalue(double statistic, int dof);

/// Pearson statistic for observed counts against expected probabilities.
/// Zero-probability categories must carry zero counts and are skipped.
double chi_square_statistic(std::span<const std::uint64_t> observed,
                            std::span<const double> expected_prob);

}  // namespace bmpaw::stats
