// SPDX-License-Identifier: Apache-2.0
#include "bmpaw/analytic_rewards.hpp"

#include <cmath>
#include <stdexcept>

#include "bmpaw/reward_math.hpp"

namespace bmpaw {

namespace {

constexpr double kCrossCheckTol = 1e-12;

detail::AttackerTermsT<double> attacker_terms_checked(const PowerProfile& profile,
                                                      const AttackParams& params)
{
    validate(params);
    const double rbar = effective_infiltration(params);
    auto t = detail::attacker_terms(profile, params.r1, params.r2, params.gamma, params.eps1,
                                    params.eps2, rbar);
    if (std::fabs(t.extra_direct - t.extra_closed) > kCrossCheckTol) {
        throw std::logic_error("attacker extra reward: difference route and closed form disagree");
    }
    return t;
}

detail::TargetTermsT<double> target_terms_checked(const PowerProfile& profile,
                                                  const AttackParams& params)
{
    validate(params);
    const double rbar = effective_infiltration(params);
    auto t = detail::target_terms(profile, params.r1, params.r2, params.gamma, params.eps1,
                                  params.eps2, rbar);
    if (std::fabs((t.bmpaw - t.paw) - t.extra_closed) > kCrossCheckTol) {
        throw std::logic_error("target extra reward: difference route and closed form disagree");
    }
    return t;
}

}  // namespace

CaseDistribution case_distribution(const PowerProfile& profile, const AttackParams& params)
{
    validate(params);
    const double a = profile.alpha;
    const double denom = 1.0 - params.r2 * a;
    CaseDistribution dist;
    dist.p_case1 = (1.0 - params.r1) * a;
    dist.p_case2 = profile.delta;
    dist.p_case3 = profile.beta;
    dist.p_case4 = profile.eta;
    dist.p_case5 = params.r1 * a;
    dist.q_case51 = (1.0 - params.r2) * a / denom;
    dist.q_case52 = profile.delta / denom;
    dist.q_case53 = profile.beta / denom;
    dist.q_case54 = profile.eta / denom;
    return dist;
}

RewardBreakdown attacker_reward_bmpaw(const PowerProfile& profile, const AttackParams& params)
{
    const auto t = attacker_terms_checked(profile, params);
    return RewardBreakdown{t.imr,        t.sr,        t.fr, t.fr_denied,
                           t.bm,         t.total_bmpaw, t.total_paw,
                           t.extra_closed};
}

RewardBreakdown attacker_reward_paw(const PowerProfile& profile, const AttackParams& params)
{
    // Same decomposition; the denial totals are what matter to the caller.
    return attacker_reward_bmpaw(profile, params);
}

double attacker_extra_reward(const PowerProfile& profile, const AttackParams& params)
{
    return attacker_terms_checked(profile, params).extra_closed;
}

double target_reward_bmpaw(const PowerProfile& profile, const AttackParams& params)
{
    return target_terms_checked(profile, params).bmpaw;
}

double target_reward_paw(const PowerProfile& profile, const AttackParams& params)
{
    return target_terms_checked(profile, params).paw;
}

double target_extra_reward(const PowerProfile& profile, const AttackParams& params)
{
    return target_terms_checked(profile, params).extra_closed;
}

double target_resolution_credit(const PowerProfile& profile, const AttackParams& params)
{
    return target_terms_checked(profile, params).resolution_credit;
}

double rer(double reward_s1, double reward_s2)
{
    if (!(reward_s2 > 0.0)) {
        throw ModelError("relative extra reward needs a positive baseline");
    }
    return (reward_s1 - reward_s2) / reward_s2;
}

}  // namespace bmpaw
