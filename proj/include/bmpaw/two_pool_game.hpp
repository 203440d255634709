// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmpaw/core_model.hpp"

namespace bmpaw::game {

/// Two pools attacking each other plus a passive remainder. Branch-selection
/// power is folded into the exogenous win probabilities: `c` for a withheld
/// block in a two-branch race, `c3_*` per pool in a three-branch race
/// (defaulting to c/2 each).
struct GameConfig {
    double alpha1 = 0.2;
    double alpha2 = 0.2;
    double c = 0.5;
    double c3_1 = 0.25;
    double c3_2 = 0.25;

    double others_power() const { return 1.0 - alpha1 - alpha2; }
};

GameConfig make_game_config(double alpha1, double alpha2, double c,
                            std::optional<double> c3 = std::nullopt);

/// Per-pool infiltration schedule. The bribe fractions are carried for
/// interface parity with the one-pool model but have no reward channel
/// here: every fork in this game pits a pool block against an outside
/// block, and the pool named on that block already mines its own branch,
/// so there is never a bribable counterparty.
struct PoolStrategy {
    double r1 = 0.0;
    double r2 = 0.0;
    double eps1 = 0.0;
    double eps2 = 0.0;
};

struct StrategyProfile {
    PoolStrategy pool1;
    PoolStrategy pool2;
};

void validate(const GameConfig& config);
void validate(const StrategyProfile& strategies);

/// Ordered-discovery case list for one pool's parameterization (ids 1..8),
/// plus the implicit complement. Probabilities over ids 1..8 and the
/// complement sum to one.
struct CaseTerm {
    int case_id = 0;
    int pool_index = 1;
    double probability = 0.0;
    std::string attribution;
};

std::vector<CaseTerm> enumerate_cases(const GameConfig& config,
                                      const StrategyProfile& strategies, int pool_index);

enum class RewardMode { Analytic, MonteCarlo };

struct PoolRewards {
    double pool1 = 0.0;
    double pool2 = 0.0;
    double others = 0.0;
    double se1 = 0.0, se2 = 0.0;
    std::uint64_t rounds = 0;
};

/// Expected per-round rewards. Analytic mode enumerates the round tree in
/// closed form; Monte Carlo samples the same tree (deterministic for a
/// fixed seed regardless of thread count).
PoolRewards pool_rewards(const GameConfig& config, const StrategyProfile& strategies,
                         RewardMode mode, std::uint64_t n_rounds = 1'000'000,
                         std::uint64_t seed = 1, int threads = 1);

struct BestResponseConfig {
    int grid = 101;
    int polish_iterations = 60;
    double step_tol = 1e-7;
};

PoolStrategy best_response(const GameConfig& config, const PoolStrategy& opponent,
                           int responder_index, const BestResponseConfig& br = {});

struct Equilibrium {
    StrategyProfile strategies;
    double reward1 = 0.0;
    double reward2 = 0.0;
    double rer1 = 0.0;
    double rer2 = 0.0;
    bool converged = false;
    int iterations = 0;
    double residual_improvement = 0.0;  // best unilateral gain found ex post
};

struct NashConfig {
    int max_iterations = 200;
    double tol = 1e-4;
    BestResponseConfig br{};
};

/// Alternating best response with 0.5 damping on oscillation.
Equilibrium nash_equilibrium(const GameConfig& config, const NashConfig& nash = {});

struct RerCell {
    double alpha2 = 0.0;
    double c = 0.0;
    Equilibrium equilibrium;
};

std::vector<RerCell> game_rer_table(double alpha1, std::span<const double> alpha2_list,
                                    std::span<const double> c_list, const NashConfig& nash = {});

}  // namespace bmpaw::game
