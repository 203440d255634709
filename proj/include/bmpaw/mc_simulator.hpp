// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

#include "bmpaw/analytic_rewards.hpp"
#include "bmpaw/core_model.hpp"
#include "bmpaw/rng.hpp"

namespace bmpaw::mc {

/// Honest: no infiltration at all. Paw: withhold and fork, target declines.
/// Bmpaw: withhold and fork, target cooperates for the configured bribes.
enum class Strategy { Honest, Paw, Bmpaw };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct SimConfig {
    PowerProfile profile{};
    AttackParams params{};
    Strategy strategy = Strategy::Bmpaw;
    std::uint64_t n_rounds = 1'000'000;
    std::uint64_t seed = 1;
    double shares_per_block = 1000.0;  ///< expected shares per unit power per block interval
    int threads = 1;
};

enum Role : int { kAttacker = 0, kVictim = 1, kTarget = 2, kOthers = 3 };
inline constexpr std::array<std::string_view, 4> kRoleNames = {
    "attacker", "victim_pool", "target_pool", "others"};

/// One round fixes exactly one main-chain block of unit value; rewards over
/// the four roles sum to 1 and bribes are pure attacker-to-target transfers.
/// Share counters cover the rounds in which the victim pool's ledger is
/// consulted (first-block cases 3 and 5).
struct SimTally {
    std::uint64_t rounds = 0;
    std::array<std::uint64_t, 5> case_counts{};     // cases 1..5
    std::array<std::uint64_t, 4> subcase_counts{};  // 5-1..5-4
    std::uint64_t fork_wins_52 = 0;
    std::uint64_t fork_wins_54 = 0;
    std::array<std::uint64_t, 4> blocks_won{};
    std::array<double, 4> reward_sum{};
    std::array<double, 4> reward_sumsq{};
    std::uint64_t attacker_share_units = 0;
    std::uint64_t victim_pool_share_units = 0;
    double case5_split_sum = 0.0;        // per-round attacker share fractions
    std::uint64_t case5_split_rounds = 0;
    double bribes_paid = 0.0;
    double imr_sum = 0.0;   // attacker income from own published blocks
    double sr_sum = 0.0;    // attacker share income outside fork resolutions
    double fork_sum = 0.0;  // attacker share income from withheld-block wins, pre-bribe
    double alpha = 0.0;     // config echo for the estimators
    double beta = 0.0;
    Strategy strategy = Strategy::Bmpaw;

    void merge(const SimTally& other);
};

struct RoundOutcome {
    int case_id = 0;     // 1..5
    int subcase_id = 0;  // 0, or 1..4 when case_id == 5
    bool fork_won = false;
    std::array<double, 4> reward{};
    double bribe = 0.0;
    double imr_part = 0.0, sr_part = 0.0, fork_part = 0.0;
    std::uint64_t infil_shares = 0, victim_shares = 0;
    bool shares_sampled = false;
    double split_obs = -1.0;  // case-5 split observation, < 0 when absent
};

RoundOutcome simulate_round(const SimConfig& config, Rng& rng);

/// Runs the full experiment. Deterministic for a fixed seed regardless of
/// the thread count: rounds draw from per-index keyed streams and partial
/// tallies merge in fixed chunk order.
SimTally simulate(const SimConfig& config);

struct EmpiricalRewards {
    RewardBreakdown breakdown;
    std::array<double, 4> mean{}, se{}, ci_low{}, ci_high{};
    std::array<bool, 4> degenerate{};
    double rbar_hat = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t rounds = 0;
};

/// Per-role mean rewards with 99% normal-approximation intervals.
/// Requires at least 1000 rounds.
EmpiricalRewards empirical_rewards(const SimTally& tally);

/// Solves attacker_share_fraction = rbar*alpha / (rbar*alpha + beta) from the
/// observed withholding-round share splits. Clamped to [0, 1].
double empirical_rbar(const SimTally& tally);

/// Two strategies driven by identical per-round random streams, so the
/// difference estimator sees only the rounds where behavior diverges.
struct PairedRun {
    SimTally first, second;
    std::array<double, 4> diff_sum{}, diff_sumsq{};
    std::uint64_t rounds = 0;

    double diff_mean(int role) const;
    double diff_se(int role) const;
    double diff_z(int role) const;  // mean / se, 0 when degenerate
};

PairedRun simulate_paired(const SimConfig& config, Strategy first, Strategy second);

}  // namespace bmpaw::mc
