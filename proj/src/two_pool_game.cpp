// SPDX-License-Identifier: Apache-2.0
#include "bmpaw/two_pool_game.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "bmpaw/rng.hpp"

namespace bmpaw::game {

namespace {

constexpr std::uint64_t kChunkRounds = 1u << 16;

double frac(double num, double den) { return den > 0.0 ? num / den : 0.0; }

/// Everything the round tree needs, symmetric in the pool index.
struct Tree {
    double a[2];        // pool powers
    double d;           // outside power
    double r1[2], r2[2];
    double c;           // two-branch win probability for a withheld block
    double c3[2];       // three-branch win probability per pool
    double w[2];        // innocent first-find weight
    double x[2];        // infiltration first-find weight
    double z1[2];       // second-phase live weight when pool i is armed
    double z2;          // third-phase live weight when both are armed

    // Share fraction of pool k's infiltration inside the opponent pool for
    // the three round shapes: one phase, armed-by-k two phases, both-armed
    // three phases (k armed at phase 2 or phase 3 depending on order).
    double skim1[2];        // phase-1 block of the opponent pool
    double skim2_own[2];    // k armed, opponent pool block (k ran r1 then r2)
    double skim2_opp[2];    // opponent armed, pool-k block: opponent's skim of k
    double skim3_first[2];  // k armed first: k's skim of the opponent block
    double skim3_second[2]; // k armed second: k's skim of the opponent block
};

Tree make_tree(const GameConfig& cfg, const StrategyProfile& s)
{
    validate(cfg);
    validate(s);
    Tree t{};
    t.a[0] = cfg.alpha1;
    t.a[1] = cfg.alpha2;
    t.d = cfg.others_power();
    t.r1[0] = s.pool1.r1;
    t.r2[0] = s.pool1.r2;
    t.r1[1] = s.pool2.r1;
    t.r2[1] = s.pool2.r2;
    t.c = cfg.c;
    t.c3[0] = cfg.c3_1;
    t.c3[1] = cfg.c3_2;

    for (int k = 0; k < 2; ++k) {
        t.w[k] = (1.0 - t.r1[k]) * t.a[k];
        t.x[k] = t.r1[k] * t.a[k];
        t.z1[k] = 1.0 - t.r2[k] * t.a[k];
    }
    t.z2 = 1.0 - t.r2[0] * t.a[0] - t.r2[1] * t.a[1];

    for (int k = 0; k < 2; ++k) {
        const int o = 1 - k;
        // Intensities are power-time means with equal phase weights.
        const double own1 = (1.0 - t.r1[o]) * t.a[o];
        t.skim1[k] = frac(t.x[k], t.x[k] + own1);

        const double infil2 = 0.5 * (t.r1[k] + t.r2[k]) * t.a[k];
        t.skim2_own[k] = frac(infil2, infil2 + own1);

        const double own2 = 0.5 * ((1.0 - t.r1[k]) + (1.0 - t.r2[k])) * t.a[k];
        t.skim2_opp[k] = frac(t.x[o], t.x[o] + own2);

        const double infil_first = (t.r1[k] + 2.0 * t.r2[k]) / 3.0 * t.a[k];
        const double own_second = (2.0 * (1.0 - t.r1[o]) + (1.0 - t.r2[o])) / 3.0 * t.a[o];
        t.skim3_first[k] = frac(infil_first, infil_first + own_second);

        const double infil_second = (2.0 * t.r1[k] + t.r2[k]) / 3.0 * t.a[k];
        const double own_first = ((1.0 - t.r1[o]) + 2.0 * (1.0 - t.r2[o])) / 3.0 * t.a[o];
        t.skim3_second[k] = frac(infil_second, infil_second + own_first);
    }
    return t;
}

struct Rewards {
    double pool[2] = {0.0, 0.0};
    double others = 0.0;
};

/// Attribute a pool block: `owner` collects the block, the opponent keeps
/// its skim fraction.
void credit_pool_block(Rewards& r, int owner, double skim_of_opponent, double weight)
{
    r.pool[owner] += weight * (1.0 - skim_of_opponent);
    r.pool[1 - owner] += weight * skim_of_opponent;
}

/// Exact expectation over the round tree.
Rewards expected_rewards(const Tree& t)
{
    Rewards r;
    // Phase 1: innocent finds and the outside complement.
    for (int k = 0; k < 2; ++k) credit_pool_block(r, k, t.skim1[1 - k], t.w[k]);
    r.others += t.d;

    for (int k = 0; k < 2; ++k) {
        const int o = 1 - k;
        const double armed = t.x[k];
        if (armed == 0.0) continue;
        const double z1 = t.z1[k];

        // Armed pool's own innocent find: withheld block discarded.
        credit_pool_block(r, k, t.skim2_opp[k], armed * (1.0 - t.r2[k]) * t.a[k] / z1);
        // Opponent's innocent find: its manager publishes its own block and
        // the armed pool keeps its share.
        credit_pool_block(r, o, t.skim2_own[k], armed * (1.0 - t.r1[o]) * t.a[o] / z1);
        // Outside find: two-branch race between the withheld block (a block
        // of the opponent pool) and the outside block.
        {
            const double weight = armed * t.d / z1;
            credit_pool_block(r, o, t.skim2_own[k], weight * t.c);
            r.others += weight * (1.0 - t.c);
        }
        // Opponent infiltration finds too: both armed, third phase.
        {
            const double both = armed * t.x[o] / z1;
            if (both > 0.0) {
                credit_pool_block(r, k, t.skim3_second[o], both * (1.0 - t.r2[k]) * t.a[k] / t.z2);
                credit_pool_block(r, o, t.skim3_first[k], both * (1.0 - t.r2[o]) * t.a[o] / t.z2);
                const double weight = both * t.d / t.z2;
                credit_pool_block(r, o, t.skim3_first[k], weight * t.c3[k]);
                credit_pool_block(r, k, t.skim3_second[o], weight * t.c3[o]);
                r.others += weight * (1.0 - t.c3[k] - t.c3[o]);
            }
        }
    }
    return r;
}

/// One sampled round over the same tree; splits use the same expected
/// fractions, so the sampled mean converges to expected_rewards exactly.
Rewards sample_round(const Tree& t, Rng& rng)
{
    Rewards r;
    const double u = rng.next_unit();
    double acc = t.w[0];
    if (u < acc) {
        credit_pool_block(r, 0, t.skim1[1], 1.0);
        return r;
    }
    acc += t.w[1];
    if (u < acc) {
        credit_pool_block(r, 1, t.skim1[0], 1.0);
        return r;
    }
    acc += t.d;
    if (u < acc) {
        r.others += 1.0;
        return r;
    }
    const int k = u < acc + t.x[0] ? 0 : 1;  // which infiltration armed first
    const int o = 1 - k;

    const double u2 = rng.next_unit() * t.z1[k];
    double acc2 = (1.0 - t.r2[k]) * t.a[k];
    if (u2 < acc2) {
        credit_pool_block(r, k, t.skim2_opp[k], 1.0);
        return r;
    }
    acc2 += (1.0 - t.r1[o]) * t.a[o];
    if (u2 < acc2) {
        credit_pool_block(r, o, t.skim2_own[k], 1.0);
        return r;
    }
    acc2 += t.d;
    if (u2 < acc2) {
        if (rng.next_unit() < t.c) {
            credit_pool_block(r, o, t.skim2_own[k], 1.0);
        } else {
            r.others += 1.0;
        }
        return r;
    }

    // Both armed; third phase.
    const double u3 = rng.next_unit() * t.z2;
    double acc3 = (1.0 - t.r2[k]) * t.a[k];
    if (u3 < acc3) {
        credit_pool_block(r, k, t.skim3_second[o], 1.0);
        return r;
    }
    acc3 += (1.0 - t.r2[o]) * t.a[o];
    if (u3 < acc3) {
        credit_pool_block(r, o, t.skim3_first[k], 1.0);
        return r;
    }
    const double u4 = rng.next_unit();
    if (u4 < t.c3[k]) {
        credit_pool_block(r, o, t.skim3_first[k], 1.0);
    } else if (u4 < t.c3[k] + t.c3[o]) {
        credit_pool_block(r, k, t.skim3_second[o], 1.0);
    } else {
        r.others += 1.0;
    }
    return r;
}

double responder_value(const GameConfig& cfg, const StrategyProfile& s, int responder_index)
{
    const auto r = expected_rewards(make_tree(cfg, s));
    return r.pool[responder_index - 1];
}

StrategyProfile with_responder(const StrategyProfile& base, int responder_index,
                               const PoolStrategy& strategy)
{
    StrategyProfile out = base;
    (responder_index == 1 ? out.pool1 : out.pool2) = strategy;
    return out;
}

double profile_distance(const StrategyProfile& a, const StrategyProfile& b)
{
    return std::max({std::fabs(a.pool1.r1 - b.pool1.r1), std::fabs(a.pool1.r2 - b.pool1.r2),
                     std::fabs(a.pool2.r1 - b.pool2.r1), std::fabs(a.pool2.r2 - b.pool2.r2)});
}

}  // namespace

GameConfig make_game_config(double alpha1, double alpha2, double c, std::optional<double> c3)
{
    GameConfig cfg;
    cfg.alpha1 = alpha1;
    cfg.alpha2 = alpha2;
    cfg.c = c;
    cfg.c3_1 = cfg.c3_2 = c3.value_or(c / 2.0);
    validate(cfg);
    return cfg;
}

void validate(const GameConfig& config)
{
    if (!(config.alpha1 > 0.0) || !(config.alpha2 > 0.0)) {
        throw ModelError("pool powers must be positive");
    }
    if (!(config.alpha1 + config.alpha2 < 1.0)) {
        throw ModelError("pool powers must leave outside miners: alpha1 + alpha2 < 1");
    }
    if (config.c < 0.0 || config.c > 1.0) throw ModelError("c must lie in [0,1]");
    if (config.c3_1 < 0.0 || config.c3_2 < 0.0 || config.c3_1 + config.c3_2 > 1.0) {
        throw ModelError("three-branch win probabilities must be nonnegative and sum to <= 1");
    }
}

void validate(const StrategyProfile& strategies)
{
    for (const auto* s : {&strategies.pool1, &strategies.pool2}) {
        for (double v : {s->r1, s->r2, s->eps1, s->eps2}) {
            if (!(v >= 0.0 && v <= 1.0)) throw ModelError("strategy fractions must lie in [0,1]");
        }
    }
}

std::vector<CaseTerm> enumerate_cases(const GameConfig& config, const StrategyProfile& strategies,
                                      int pool_index)
{
    if (pool_index != 1 && pool_index != 2) throw ModelError("pool index must be 1 or 2");
    const Tree t = make_tree(config, strategies);
    const int i = pool_index - 1;
    const int o = 1 - i;

    const double own2_i = (1.0 - t.r2[i]) * t.a[i];
    const double own1_i = (1.0 - t.r1[i]) * t.a[i];

    std::vector<CaseTerm> cases;
    cases.push_back({1, pool_index, t.w[i], "innocent find; own block, opponent keeps its skim"});
    cases.push_back({2, pool_index, t.x[i] * own2_i / t.z1[i],
                     "own infiltration armed, own innocent finds; withheld block discarded"});
    cases.push_back({3, pool_index, t.x[o] * own1_i / t.z1[o],
                     "opponent armed, own innocent finds; own block stands"});
    cases.push_back({4, pool_index, t.x[0] * t.x[1] / t.z1[0] * own2_i / t.z2,
                     "pool1 then pool2 infiltration, own innocent resolves"});
    cases.push_back({5, pool_index, t.x[1] * t.x[0] / t.z1[1] * own2_i / t.z2,
                     "pool2 then pool1 infiltration, own innocent resolves"});
    cases.push_back({6, pool_index, t.x[o] * t.d / t.z1[o],
                     "opponent armed, outside block; two-branch race at c"});
    cases.push_back({7, pool_index, t.x[0] * t.x[1] / t.z1[0] * t.d / t.z2,
                     "pool1 then pool2 infiltration, outside block; three-branch race"});
    cases.push_back({8, pool_index, t.x[1] * t.x[0] / t.z1[1] * t.d / t.z2,
                     "pool2 then pool1 infiltration, outside block; three-branch race"});
    return cases;
}

PoolRewards pool_rewards(const GameConfig& config, const StrategyProfile& strategies,
                         RewardMode mode, std::uint64_t n_rounds, std::uint64_t seed,
                         int threads)
{
    const Tree t = make_tree(config, strategies);
    PoolRewards out;
    if (mode == RewardMode::Analytic) {
        const auto r = expected_rewards(t);
        out.pool1 = r.pool[0];
        out.pool2 = r.pool[1];
        out.others = r.others;
        return out;
    }

    if (n_rounds == 0) throw ModelError("n_rounds must be >= 1");
    struct Partial {
        double sum[2] = {0.0, 0.0}, sumsq[2] = {0.0, 0.0};
        double others = 0.0;
    };
    const std::uint64_t n_chunks = (n_rounds + kChunkRounds - 1) / kChunkRounds;
    std::vector<Partial> partials(n_chunks);

    std::atomic<std::uint64_t> next_chunk{0};
    const int workers = static_cast<int>(
        std::min<std::uint64_t>(std::max(threads, 1), std::max<std::uint64_t>(n_chunks, 1)));
    auto work = [&] {
        for (;;) {
            const std::uint64_t chunk = next_chunk.fetch_add(1);
            if (chunk >= n_chunks) return;
            const std::uint64_t begin = chunk * kChunkRounds;
            const std::uint64_t end = std::min(begin + kChunkRounds, n_rounds);
            auto& part = partials[chunk];
            for (std::uint64_t idx = begin; idx < end; ++idx) {
                Rng rng(derive_stream(seed, idx));
                const Rewards r = sample_round(t, rng);
                for (int k = 0; k < 2; ++k) {
                    part.sum[k] += r.pool[k];
                    part.sumsq[k] += r.pool[k] * r.pool[k];
                }
                part.others += r.others;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    double sum[2] = {0.0, 0.0}, sumsq[2] = {0.0, 0.0}, others = 0.0;
    for (const auto& part : partials) {
        for (int k = 0; k < 2; ++k) {
            sum[k] += part.sum[k];
            sumsq[k] += part.sumsq[k];
        }
        others += part.others;
    }
    const double n = static_cast<double>(n_rounds);
    out.pool1 = sum[0] / n;
    out.pool2 = sum[1] / n;
    out.others = others / n;
    out.se1 = std::sqrt(std::max(0.0, (sumsq[0] - n * out.pool1 * out.pool1) / (n - 1.0)) / n);
    out.se2 = std::sqrt(std::max(0.0, (sumsq[1] - n * out.pool2 * out.pool2) / (n - 1.0)) / n);
    out.rounds = n_rounds;
    return out;
}

PoolStrategy best_response(const GameConfig& config, const PoolStrategy& opponent,
                           int responder_index, const BestResponseConfig& br)
{
    if (responder_index != 1 && responder_index != 2) throw ModelError("pool index must be 1 or 2");
    // The responder-2 problem is the responder-1 problem of the mirrored
    // game; evaluating it that way keeps symmetric states bitwise symmetric.
    if (responder_index == 2) {
        GameConfig mirrored = config;
        std::swap(mirrored.alpha1, mirrored.alpha2);
        std::swap(mirrored.c3_1, mirrored.c3_2);
        return best_response(mirrored, opponent, 1, br);
    }

    StrategyProfile profile;
    profile.pool2 = opponent;

    auto value_at = [&](double r1, double r2) {
        PoolStrategy s{r1, r2, 0.0, 0.0};
        return responder_value(config, with_responder(profile, responder_index, s),
                               responder_index);
    };

    // Grid scan, ties toward smaller (r1, r2).
    double best_v = -1.0;
    double best_r1 = 0.0, best_r2 = 0.0;
    for (int i = 0; i < br.grid; ++i) {
        const double r1 = static_cast<double>(i) / (br.grid - 1);
        for (int j = 0; j < br.grid; ++j) {
            const double r2 = static_cast<double>(j) / (br.grid - 1);
            const double v = value_at(r1, r2);
            if (v > best_v) {
                best_v = v;
                best_r1 = r1;
                best_r2 = r2;
            }
        }
    }

    // Local polish: projected ascent with finite-difference gradients.
    const double h = 1e-6;
    double step = 0.05;
    for (int it = 0; it < br.polish_iterations && step > br.step_tol; ++it) {
        const double g1 = (value_at(std::min(best_r1 + h, 1.0), best_r2) -
                           value_at(std::max(best_r1 - h, 0.0), best_r2)) /
                          (std::min(best_r1 + h, 1.0) - std::max(best_r1 - h, 0.0));
        const double g2 = (value_at(best_r1, std::min(best_r2 + h, 1.0)) -
                           value_at(best_r1, std::max(best_r2 - h, 0.0))) /
                          (std::min(best_r2 + h, 1.0) - std::max(best_r2 - h, 0.0));
        const double norm = std::max(std::fabs(g1), std::fabs(g2));
        if (norm < 1e-12) break;
        const double cand_r1 = std::clamp(best_r1 + step * g1 / norm, 0.0, 1.0);
        const double cand_r2 = std::clamp(best_r2 + step * g2 / norm, 0.0, 1.0);
        const double cand_v = value_at(cand_r1, cand_r2);
        if (cand_v > best_v) {
            best_v = cand_v;
            best_r1 = cand_r1;
            best_r2 = cand_r2;
        } else {
            step *= 0.5;
        }
    }
    return PoolStrategy{best_r1, best_r2, 0.0, 0.0};
}

Equilibrium nash_equilibrium(const GameConfig& config, const NashConfig& nash)
{
    // Best-response iteration with both pools updating against the same
    // state and a 0.5 damping factor on every step. Pure best-response
    // cycles in parts of the parameter space (notably the constant-sum
    // c = 1 slice); the damped map converges wherever a pure equilibrium
    // exists and keeps symmetric configurations exactly symmetric.
    StrategyProfile current;  // both honest
    Equilibrium eq;
    int it = 0;
    double moved = 1.0;
    for (; it < nash.max_iterations; ++it) {
        const PoolStrategy br1 = best_response(config, current.pool2, 1, nash.br);
        const PoolStrategy br2 = best_response(config, current.pool1, 2, nash.br);
        StrategyProfile next;
        next.pool1.r1 = 0.5 * (current.pool1.r1 + br1.r1);
        next.pool1.r2 = 0.5 * (current.pool1.r2 + br1.r2);
        next.pool2.r1 = 0.5 * (current.pool2.r1 + br2.r1);
        next.pool2.r2 = 0.5 * (current.pool2.r2 + br2.r2);
        moved = profile_distance(next, current);
        current = next;
        if (moved < 0.5 * nash.tol) {
            eq.converged = true;
            ++it;
            break;
        }
    }
    eq.strategies = current;
    eq.iterations = it;
    const auto rewards = pool_rewards(config, current, RewardMode::Analytic);
    eq.reward1 = rewards.pool1;
    eq.reward2 = rewards.pool2;
    eq.rer1 = (rewards.pool1 - config.alpha1) / config.alpha1;
    eq.rer2 = (rewards.pool2 - config.alpha2) / config.alpha2;

    // Ex-post check: can either pool still improve materially on its grid?
    double residual = 0.0;
    for (int pool = 1; pool <= 2; ++pool) {
        const auto br = best_response(config, pool == 1 ? current.pool2 : current.pool1, pool,
                                      nash.br);
        const double now = responder_value(config, current, pool);
        const double better =
            responder_value(config, with_responder(current, pool, br), pool);
        residual = std::max(residual, better - now);
    }
    eq.residual_improvement = residual;
    if (residual > nash.tol) eq.converged = false;
    return eq;
}

std::vector<RerCell> game_rer_table(double alpha1, std::span<const double> alpha2_list,
                                    std::span<const double> c_list, const NashConfig& nash)
{
    std::vector<RerCell> cells;
    cells.reserve(alpha2_list.size() * c_list.size());
    for (double alpha2 : alpha2_list) {
        for (double c : c_list) {
            RerCell cell;
            cell.alpha2 = alpha2;
            cell.c = c;
            cell.equilibrium = nash_equilibrium(make_game_config(alpha1, alpha2, c), nash);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace bmpaw::game
