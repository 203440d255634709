// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bmpaw/core_model.hpp"

namespace bmpaw {

/// Probability of each first-block outcome, plus the conditional
/// distribution over the four withholding continuations.
struct CaseDistribution {
    double p_case1 = 0.0;  ///< attacker's innocent mining finds first
    double p_case2 = 0.0;  ///< unaffiliated miners find first
    double p_case3 = 0.0;  ///< victim pool's own power finds first
    double p_case4 = 0.0;  ///< target pool finds first
    double p_case5 = 0.0;  ///< attacker's infiltration finds first (withhold)
    double q_case51 = 0.0;
    double q_case52 = 0.0;
    double q_case53 = 0.0;
    double q_case54 = 0.0;
};

CaseDistribution case_distribution(const PowerProfile& profile, const AttackParams& params);

/// Attacker reward per round, decomposed. Totals satisfy
///   total_bmpaw = imr + sr + fr - bm
///   total_paw   = imr + sr + fr_denied
///   extra       = total_bmpaw - total_paw
struct RewardBreakdown {
    double imr = 0.0;        ///< innocent-mining reward
    double sr = 0.0;         ///< share reward skimmed from the victim pool
    double fr = 0.0;         ///< forking reward, target cooperating
    double fr_denied = 0.0;  ///< forking reward, target declining
    double bm = 0.0;         ///< bribes paid out
    double total_bmpaw = 0.0;
    double total_paw = 0.0;
    double extra = 0.0;
};

RewardBreakdown attacker_reward_bmpaw(const PowerProfile& profile, const AttackParams& params);
RewardBreakdown attacker_reward_paw(const PowerProfile& profile, const AttackParams& params);

/// Extra reward of bribing over plain power-adjusting withholding.
/// Evaluated both as the difference of totals and by the closed form;
/// the two routes must agree to 1e-12 or a logic error is raised.
double attacker_extra_reward(const PowerProfile& profile, const AttackParams& params);

double target_reward_bmpaw(const PowerProfile& profile, const AttackParams& params);
double target_reward_paw(const PowerProfile& profile, const AttackParams& params);
double target_extra_reward(const PowerProfile& profile, const AttackParams& params);

/// The closed-form target totals credit the target with the follow-up block
/// it may find while a withheld-block round resolves. The per-round
/// simulator books that block in the round where it is found, so level
/// comparisons against simulation subtract this common credit (it cancels
/// in target_extra_reward).
double target_resolution_credit(const PowerProfile& profile, const AttackParams& params);

/// Relative extra reward of strategy 1 over strategy 2 for one participant.
/// The baseline must be positive.
double rer(double reward_s1, double reward_s2);

}  // namespace bmpaw
