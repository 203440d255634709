// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bmpaw {

/// Thrown when inputs violate the threat model (power bounds, fraction
/// ranges) or when a derived quantity is requested outside its domain.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Rule for the effective mean infiltration fraction used by the
/// withholding-phase share terms. Mean is the arithmetic mean of the
/// two phase fractions; Empirical plugs in a value measured from a
/// simulation tally.
enum class RbarPolicy { Mean, R1Only, R2Only, Empirical };

std::string_view to_string(RbarPolicy policy);
RbarPolicy rbar_policy_from_string(std::string_view name);

/// Normalized mining powers of the four participant classes. `delta` is
/// always derived as the complement, never supplied, so the unit-total
/// invariant cannot be violated by construction.
struct PowerProfile {
    double alpha = 0.0;  ///< attacker
    double beta = 0.0;   ///< victim pool (excluding infiltration)
    double eta = 0.0;    ///< target pool
    double delta = 0.0;  ///< everyone else, = 1 - alpha - beta - eta
};

/// Builds a profile from the three independent powers.
/// Requires 0 < alpha < 0.5 and beta, eta >= 0 with alpha+beta+eta <= 1.
PowerProfile make_power_profile(double alpha, double beta, double eta);

/// Attacker strategy knobs. All fractions live in [0,1].
struct AttackParams {
    double r1 = 0.0;     ///< infiltration fraction before power adjusting
    double r2 = 0.0;     ///< infiltration fraction after power adjusting
    double gamma = 0.0;  ///< share of unaffiliated miners picking the attacker's branch
    double eps1 = 0.0;   ///< bribe fraction per block, fork against outside miners
    double eps2 = 0.0;   ///< bribe fraction per block, fork against the target
    RbarPolicy rbar_policy = RbarPolicy::Mean;
    double rbar_empirical = std::numeric_limits<double>::quiet_NaN();
};

void validate(const AttackParams& params);

/// Probabilities that the attacker's withheld block wins the fork race,
/// for the four withholding outcomes: c52/c54 when the target cooperates,
/// c52d/c54d when it declines. c54 is identically 1: with the target
/// discarding its own block there is no competing branch.
struct WinProbabilities {
    double c52 = 0.0;
    double c54 = 1.0;
    double c52d = 0.0;
    double c54d = 0.0;
};

WinProbabilities win_probabilities(const PowerProfile& profile, const AttackParams& params);

/// Effective mean infiltration fraction per the configured policy.
double effective_infiltration(const AttackParams& params);

}  // namespace bmpaw
