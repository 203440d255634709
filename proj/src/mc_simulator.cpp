// SPDX-License-Identifier: Apache-2.0
#include "bmpaw/mc_simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "bmpaw/stats.hpp"

namespace bmpaw::mc {

namespace {

constexpr std::uint64_t kChunkRounds = 1u << 16;

/// Per-run constants hoisted out of the round loop.
struct RoundContext {
    double alpha, beta, eta, delta;
    double r1, r2;
    double eps1, eps2;
    bool accept;  // target cooperates (bribed)
    double shares_per_block;
    double w_case1, w_case12, w_case123, w_case1234;  // cumulative first-finder weights
    double sub_denom;                                 // 1 - r2*alpha
    double q51, q512, q5123;                          // cumulative second-finder weights
    double c52, c52d, c54d;
    double share_pre_expected;  // r1*alpha / (r1*alpha + beta)
};

RoundContext make_context(const SimConfig& cfg)
{
    validate(cfg.params);
    if (cfg.shares_per_block < 1.0) throw ModelError("shares_per_block must be >= 1");
    const bool attacking = cfg.strategy != Strategy::Honest;
    RoundContext ctx{};
    ctx.alpha = cfg.profile.alpha;
    ctx.beta = cfg.profile.beta;
    ctx.eta = cfg.profile.eta;
    ctx.delta = cfg.profile.delta;
    ctx.r1 = attacking ? cfg.params.r1 : 0.0;
    ctx.r2 = attacking ? cfg.params.r2 : 0.0;
    ctx.eps1 = cfg.params.eps1;
    ctx.eps2 = cfg.params.eps2;
    ctx.accept = cfg.strategy == Strategy::Bmpaw;
    ctx.shares_per_block = cfg.shares_per_block;

    ctx.w_case1 = (1.0 - ctx.r1) * ctx.alpha;
    ctx.w_case12 = ctx.w_case1 + ctx.delta;
    ctx.w_case123 = ctx.w_case12 + ctx.beta;
    ctx.w_case1234 = ctx.w_case123 + ctx.eta;

    ctx.sub_denom = 1.0 - ctx.r2 * ctx.alpha;
    ctx.q51 = (1.0 - ctx.r2) * ctx.alpha;
    ctx.q512 = ctx.q51 + ctx.delta;
    ctx.q5123 = ctx.q512 + ctx.beta;

    AttackParams effective = cfg.params;
    effective.r1 = ctx.r1;
    effective.r2 = ctx.r2;
    const auto win = win_probabilities(cfg.profile, effective);
    ctx.c52 = win.c52;
    ctx.c52d = win.c52d;
    ctx.c54d = win.c54d;

    const double infil1 = ctx.r1 * ctx.alpha;
    ctx.share_pre_expected = infil1 + ctx.beta > 0.0 ? infil1 / (infil1 + ctx.beta) : 0.0;
    return ctx;
}

RoundOutcome run_round(const RoundContext& ctx, Rng& rng)
{
    RoundOutcome out{};
    const double u = rng.next_unit();

    if (u < ctx.w_case1) {
        out.case_id = 1;
        out.reward[kAttacker] = 1.0;
        out.imr_part = 1.0;
        return out;
    }
    if (u < ctx.w_case12) {
        out.case_id = 2;
        out.reward[kOthers] = 1.0;
        return out;
    }
    if (u < ctx.w_case123) {
        // Victim pool publishes its own block; reward splits over the shares
        // accumulated so far, which only cover the pre-adjustment phase.
        out.case_id = 3;
        const double t1 = rng.exponential();
        const double scale = ctx.shares_per_block * t1;
        const std::uint64_t sa = rng.poisson(scale * ctx.r1 * ctx.alpha);
        const std::uint64_t sv = rng.poisson(scale * ctx.beta);
        out.infil_shares = sa;
        out.victim_shares = sv;
        out.shares_sampled = true;
        const double f = sa + sv > 0
                             ? static_cast<double>(sa) / static_cast<double>(sa + sv)
                             : ctx.share_pre_expected;
        out.reward[kAttacker] = f;
        out.reward[kVictim] = 1.0 - f;
        out.sr_part = f;
        return out;
    }
    if (u < ctx.w_case1234) {
        out.case_id = 4;
        out.reward[kTarget] = 1.0;
        return out;
    }

    // Case 5: infiltration found the block; withhold and adjust power.
    out.case_id = 5;
    const double t1 = rng.exponential();
    const double t2 = rng.exponential();
    const double s = ctx.shares_per_block;
    const std::uint64_t sa = rng.poisson(s * ctx.r1 * ctx.alpha * t1) +
                             rng.poisson(s * ctx.r2 * ctx.alpha * t2);
    const std::uint64_t sv = rng.poisson(s * ctx.beta * t1) + rng.poisson(s * ctx.beta * t2);
    out.infil_shares = sa;
    out.victim_shares = sv;
    out.shares_sampled = true;
    double f;
    if (sa + sv > 0) {
        f = static_cast<double>(sa) / static_cast<double>(sa + sv);
    } else {
        const double num = ctx.alpha * (ctx.r1 * t1 + ctx.r2 * t2);
        const double den = num + ctx.beta * (t1 + t2);
        f = den > 0.0 ? num / den : 0.0;
    }
    out.split_obs = f;

    const double u2 = rng.next_unit() * ctx.sub_denom;
    if (u2 < ctx.q51) {
        out.subcase_id = 1;
        out.reward[kAttacker] = 1.0;
        out.imr_part = 1.0;
        return out;
    }
    if (u2 < ctx.q512) {
        out.subcase_id = 2;
        const double cwin = ctx.accept ? ctx.c52 : ctx.c52d;
        if (rng.next_unit() < cwin) {
            out.fork_won = true;
            out.fork_part = f;
            out.reward[kVictim] = 1.0 - f;
            if (ctx.accept) {
                out.bribe = ctx.eps1 * f;
                out.reward[kAttacker] = f - out.bribe;
                out.reward[kTarget] = out.bribe;
            } else {
                out.reward[kAttacker] = f;
            }
        } else {
            out.reward[kOthers] = 1.0;
        }
        return out;
    }
    if (u2 < ctx.q5123) {
        out.subcase_id = 3;
        out.reward[kAttacker] = f;
        out.reward[kVictim] = 1.0 - f;
        out.sr_part = f;
        return out;
    }

    out.subcase_id = 4;
    if (ctx.accept) {
        // The bribed target discards its block, so the withheld one stands.
        out.fork_won = true;
        out.fork_part = f;
        out.bribe = ctx.eps2 * f;
        out.reward[kAttacker] = f - out.bribe;
        out.reward[kTarget] = out.bribe;
        out.reward[kVictim] = 1.0 - f;
    } else if (rng.next_unit() < ctx.c54d) {
        out.fork_won = true;
        out.fork_part = f;
        out.reward[kAttacker] = f;
        out.reward[kVictim] = 1.0 - f;
    } else {
        out.reward[kTarget] = 1.0;
    }
    return out;
}

void accumulate(SimTally& tally, const RoundOutcome& out)
{
    ++tally.rounds;
    ++tally.case_counts[out.case_id - 1];
    if (out.case_id == 5) {
        ++tally.subcase_counts[out.subcase_id - 1];
        if (out.subcase_id == 2 && out.fork_won) ++tally.fork_wins_52;
        if (out.subcase_id == 4 && out.fork_won) ++tally.fork_wins_54;
        tally.case5_split_sum += out.split_obs;
        ++tally.case5_split_rounds;
    }
    for (int role = 0; role < 4; ++role) {
        tally.reward_sum[role] += out.reward[role];
        tally.reward_sumsq[role] += out.reward[role] * out.reward[role];
    }
    tally.attacker_share_units += out.infil_shares;
    tally.victim_pool_share_units += out.victim_shares;
    tally.bribes_paid += out.bribe;
    tally.imr_sum += out.imr_part;
    tally.sr_sum += out.sr_part;
    tally.fork_sum += out.fork_part;

    int winner = kOthers;
    switch (out.case_id) {
        case 1: winner = kAttacker; break;
        case 2: winner = kOthers; break;
        case 3: winner = kVictim; break;
        case 4: winner = kTarget; break;
        case 5:
            switch (out.subcase_id) {
                case 1: winner = kAttacker; break;
                case 2: winner = out.fork_won ? kVictim : kOthers; break;
                case 3: winner = kVictim; break;
                case 4: winner = out.fork_won ? kVictim : kTarget; break;
            }
            break;
    }
    ++tally.blocks_won[winner];
}

template <class PerRound>
void run_chunked(std::uint64_t n_rounds, std::uint64_t seed, int threads, PerRound&& per_round)
{
    const std::uint64_t n_chunks = (n_rounds + kChunkRounds - 1) / kChunkRounds;
    const int workers = static_cast<int>(
        std::min<std::uint64_t>(std::max(threads, 1), std::max<std::uint64_t>(n_chunks, 1)));

    std::atomic<std::uint64_t> next_chunk{0};
    auto work = [&] {
        for (;;) {
            const std::uint64_t chunk = next_chunk.fetch_add(1);
            if (chunk >= n_chunks) return;
            const std::uint64_t begin = chunk * kChunkRounds;
            const std::uint64_t end = std::min(begin + kChunkRounds, n_rounds);
            for (std::uint64_t idx = begin; idx < end; ++idx) {
                Rng rng(derive_stream(seed, idx));
                per_round(chunk, idx, rng);
            }
        }
    };

    if (workers <= 1) {
        work();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
}

}  // namespace

std::string_view to_string(Strategy strategy)
{
    switch (strategy) {
        case Strategy::Honest: return "honest";
        case Strategy::Paw: return "paw";
        case Strategy::Bmpaw: return "bmpaw";
    }
    return "bmpaw";
}

Strategy strategy_from_string(std::string_view name)
{
    if (name == "honest") return Strategy::Honest;
    if (name == "paw") return Strategy::Paw;
    if (name == "bmpaw") return Strategy::Bmpaw;
    throw ModelError("unknown strategy: " + std::string(name));
}

void SimTally::merge(const SimTally& other)
{
    rounds += other.rounds;
    for (std::size_t i = 0; i < case_counts.size(); ++i) case_counts[i] += other.case_counts[i];
    for (std::size_t i = 0; i < subcase_counts.size(); ++i) {
        subcase_counts[i] += other.subcase_counts[i];
    }
    fork_wins_52 += other.fork_wins_52;
    fork_wins_54 += other.fork_wins_54;
    for (int role = 0; role < 4; ++role) {
        blocks_won[role] += other.blocks_won[role];
        reward_sum[role] += other.reward_sum[role];
        reward_sumsq[role] += other.reward_sumsq[role];
    }
    attacker_share_units += other.attacker_share_units;
    victim_pool_share_units += other.victim_pool_share_units;
    case5_split_sum += other.case5_split_sum;
    case5_split_rounds += other.case5_split_rounds;
    bribes_paid += other.bribes_paid;
    imr_sum += other.imr_sum;
    sr_sum += other.sr_sum;
    fork_sum += other.fork_sum;
}

RoundOutcome simulate_round(const SimConfig& config, Rng& rng)
{
    return run_round(make_context(config), rng);
}

SimTally simulate(const SimConfig& config)
{
    if (config.n_rounds == 0) throw ModelError("n_rounds must be >= 1");
    const RoundContext ctx = make_context(config);

    const std::uint64_t n_chunks = (config.n_rounds + kChunkRounds - 1) / kChunkRounds;
    std::vector<SimTally> partials(n_chunks);
    run_chunked(config.n_rounds, config.seed, config.threads,
                [&](std::uint64_t chunk, std::uint64_t, Rng& rng) {
                    accumulate(partials[chunk], run_round(ctx, rng));
                });

    SimTally total;
    total.alpha = config.profile.alpha;
    total.beta = config.profile.beta;
    total.strategy = config.strategy;
    for (const auto& part : partials) total.merge(part);
    return total;
}

EmpiricalRewards empirical_rewards(const SimTally& tally)
{
    if (tally.rounds < 1000) {
        throw ModelError("empirical_rewards needs at least 1000 rounds");
    }
    EmpiricalRewards emp;
    emp.rounds = tally.rounds;
    const double n = static_cast<double>(tally.rounds);
    for (int role = 0; role < 4; ++role) {
        const double mean = tally.reward_sum[role] / n;
        const double var =
            std::max(0.0, (tally.reward_sumsq[role] - n * mean * mean) / (n - 1.0));
        const double se = std::sqrt(var / n);
        emp.mean[role] = mean;
        emp.se[role] = se;
        emp.ci_low[role] = mean - stats::kZ99TwoSided * se;
        emp.ci_high[role] = mean + stats::kZ99TwoSided * se;
        emp.degenerate[role] = var == 0.0;
    }

    emp.breakdown.imr = tally.imr_sum / n;
    emp.breakdown.sr = tally.sr_sum / n;
    emp.breakdown.bm = tally.bribes_paid / n;
    const double fork_mean = tally.fork_sum / n;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    switch (tally.strategy) {
        case Strategy::Bmpaw:
            emp.breakdown.fr = fork_mean;
            emp.breakdown.fr_denied = nan;
            emp.breakdown.total_bmpaw = emp.mean[kAttacker];
            emp.breakdown.total_paw = nan;
            break;
        case Strategy::Paw:
            emp.breakdown.fr = nan;
            emp.breakdown.fr_denied = fork_mean;
            emp.breakdown.total_bmpaw = nan;
            emp.breakdown.total_paw = emp.mean[kAttacker];
            break;
        case Strategy::Honest:
            emp.breakdown.fr = fork_mean;
            emp.breakdown.fr_denied = fork_mean;
            emp.breakdown.total_bmpaw = emp.mean[kAttacker];
            emp.breakdown.total_paw = emp.mean[kAttacker];
            break;
    }
    emp.breakdown.extra = nan;
    if (tally.case5_split_rounds > 0) emp.rbar_hat = empirical_rbar(tally);
    return emp;
}

double empirical_rbar(const SimTally& tally)
{
    if (tally.case5_split_rounds == 0) {
        throw ModelError("no withholding rounds observed; empirical rbar undefined");
    }
    const double f = tally.case5_split_sum / static_cast<double>(tally.case5_split_rounds);
    if (f >= 1.0) return 1.0;
    if (tally.alpha <= 0.0) return 0.0;
    const double rbar = tally.beta * f / (tally.alpha * (1.0 - f));
    return std::clamp(rbar, 0.0, 1.0);
}

double PairedRun::diff_mean(int role) const
{
    return diff_sum[role] / static_cast<double>(rounds);
}

double PairedRun::diff_se(int role) const
{
    const double n = static_cast<double>(rounds);
    const double mean = diff_sum[role] / n;
    const double var = std::max(0.0, (diff_sumsq[role] - n * mean * mean) / (n - 1.0));
    return std::sqrt(var / n);
}

double PairedRun::diff_z(int role) const
{
    const double se = diff_se(role);
    return se > 0.0 ? diff_mean(role) / se : 0.0;
}

PairedRun simulate_paired(const SimConfig& config, Strategy first, Strategy second)
{
    if (config.n_rounds == 0) throw ModelError("n_rounds must be >= 1");
    SimConfig cfg_a = config;
    cfg_a.strategy = first;
    SimConfig cfg_b = config;
    cfg_b.strategy = second;
    const RoundContext ctx_a = make_context(cfg_a);
    const RoundContext ctx_b = make_context(cfg_b);

    struct Partial {
        SimTally a, b;
        std::array<double, 4> diff_sum{}, diff_sumsq{};
    };
    const std::uint64_t n_chunks = (config.n_rounds + kChunkRounds - 1) / kChunkRounds;
    std::vector<Partial> partials(n_chunks);

    run_chunked(config.n_rounds, config.seed, config.threads,
                [&](std::uint64_t chunk, std::uint64_t idx, Rng& rng) {
                    Rng rng_b(derive_stream(config.seed, idx));
                    const RoundOutcome out_a = run_round(ctx_a, rng);
                    const RoundOutcome out_b = run_round(ctx_b, rng_b);
                    auto& part = partials[chunk];
                    accumulate(part.a, out_a);
                    accumulate(part.b, out_b);
                    for (int role = 0; role < 4; ++role) {
                        const double d = out_a.reward[role] - out_b.reward[role];
                        part.diff_sum[role] += d;
                        part.diff_sumsq[role] += d * d;
                    }
                });

    PairedRun run;
    run.first.alpha = run.second.alpha = config.profile.alpha;
    run.first.beta = run.second.beta = config.profile.beta;
    run.first.strategy = first;
    run.second.strategy = second;
    for (const auto& part : partials) {
        run.first.merge(part.a);
        run.second.merge(part.b);
        for (int role = 0; role < 4; ++role) {
            run.diff_sum[role] += part.diff_sum[role];
            run.diff_sumsq[role] += part.diff_sumsq[role];
        }
    }
    run.rounds = config.n_rounds;
    return run;
}

}  // namespace bmpaw::mc
