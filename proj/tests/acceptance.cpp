// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one check per release criterion, each printing a single
// PASS/FAIL line. Run with --criterion N for one check or no filter for all.
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bmpaw/analytic_rewards.hpp"
#include "bmpaw/bribe_pricing.hpp"
#include "bmpaw/experiment.hpp"
#include "bmpaw/mc_simulator.hpp"
#include "bmpaw/power_optimizer.hpp"
#include "bmpaw/stats.hpp"
#include "bmpaw/two_pool_game.hpp"
#include "test_helpers.hpp"

using namespace bmpaw;
namespace fs = std::filesystem;

namespace {

std::string g_cli_path;

struct Criterion {
    int id;
    const char* summary;
    std::function<bool()> run;
};

// ---------------------------------------------------------------------------
// 1. Honest baseline: closed form exact, simulation within 3 standard errors.
bool criterion1()
{
    const std::array<std::array<double, 3>, 3> profiles = {{
        {0.2, 0.2, 0.2},
        {0.1, 0.3, 0.1},
        {0.4, 0.15, 0.05},
    }};
    bool ok = true;
    for (const auto& [alpha, beta, eta] : profiles) {
        const auto profile = make_power_profile(alpha, beta, eta);
        AttackParams params;
        params.gamma = 0.5;
        params.eps1 = params.eps2 = 0.1;
        const auto analytic = attacker_reward_bmpaw(profile, params);
        const bool analytic_ok = std::fabs(analytic.total_bmpaw - alpha) <= 1e-12 &&
                                 std::fabs(analytic.total_paw - alpha) <= 1e-12;

        mc::SimConfig cfg;
        cfg.profile = profile;
        cfg.params = params;
        cfg.strategy = mc::Strategy::Honest;
        cfg.n_rounds = 1'000'000;
        cfg.seed = 101;
        const auto emp = mc::empirical_rewards(mc::simulate(cfg));
        const bool mc_ok =
            std::fabs(emp.mean[mc::kAttacker] - alpha) <= 3.0 * emp.se[mc::kAttacker];
        std::printf("  alpha=%.2f analytic %s, mc mean %.6f (se %.6f) %s\n", alpha,
                    analytic_ok ? "exact" : "WRONG", emp.mean[mc::kAttacker],
                    emp.se[mc::kAttacker], mc_ok ? "ok" : "OFF");
        ok = ok && analytic_ok && mc_ok;
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 2. Probability conservation plus chi-square goodness of fit at 1e6 rounds.
bool criterion2()
{
    Rng rng(202);
    bool ok = true;
    for (int i = 0; i < 20; ++i) {
        const auto profile = testing::random_profile(rng);
        auto params = testing::random_params(rng);
        params.r1 = 0.1 + 0.8 * rng.next_unit();
        params.r2 = 0.1 + 0.8 * rng.next_unit();

        const auto dist = case_distribution(profile, params);
        const double sum_p =
            dist.p_case1 + dist.p_case2 + dist.p_case3 + dist.p_case4 + dist.p_case5;
        const double sum_q = dist.q_case51 + dist.q_case52 + dist.q_case53 + dist.q_case54;
        const bool sums_ok = std::fabs(sum_p - 1.0) <= 1e-12 && std::fabs(sum_q - 1.0) <= 1e-12;

        mc::SimConfig cfg;
        cfg.profile = profile;
        cfg.params = params;
        cfg.strategy = mc::Strategy::Bmpaw;
        cfg.n_rounds = 1'000'000;
        cfg.seed = 300 + i;
        const auto tally = mc::simulate(cfg);
        const std::array<std::uint64_t, 8> observed = {
            tally.case_counts[0],    tally.case_counts[1],    tally.case_counts[2],
            tally.case_counts[3],    tally.subcase_counts[0], tally.subcase_counts[1],
            tally.subcase_counts[2], tally.subcase_counts[3]};
        const std::array<double, 8> expected = {
            dist.p_case1,
            dist.p_case2,
            dist.p_case3,
            dist.p_case4,
            dist.p_case5 * dist.q_case51,
            dist.p_case5 * dist.q_case52,
            dist.p_case5 * dist.q_case53,
            dist.p_case5 * dist.q_case54};
        const double stat = stats::chi_square_statistic(observed, expected);
        const double pvalue = stats::chi_square_pvalue(stat, 7);
        const bool fit_ok = pvalue > 0.001;
        if (!sums_ok || !fit_ok) {
            std::printf("  config %d: sums %s, chi2 %.2f p=%.5f %s\n", i,
                        sums_ok ? "ok" : "BAD", stat, pvalue, fit_ok ? "ok" : "REJECTED");
        }
        ok = ok && sums_ok && fit_ok;
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 3. Optimized reward never falls below honest mining (500 random configs).
bool criterion3()
{
    Rng rng(303);
    opt::SolverConfig solver;
    solver.cross_check_oracle = false;
    bool ok = true;
    double worst = 1e9;
    for (int i = 0; i < 500; ++i) {
        const auto profile = testing::random_profile(rng);
        const auto params = testing::random_params(rng);
        const auto result = opt::optimize_infiltration(profile, params, solver);
        const double margin = result.reward_at_opt - profile.alpha;
        worst = std::min(worst, margin);
        if (margin < -1e-9) {
            std::printf("  config %d below honest by %.3e\n", i, -margin);
            ok = false;
        }
    }
    std::printf("  worst margin over honest: %.3e\n", worst);
    return ok;
}

// ---------------------------------------------------------------------------
// 4. Closed-form inequality classification matches the reward signs on a
//    50x50 bribe grid, boundary band 1e-9 excluded.
bool criterion4()
{
    Rng rng(404);
    bool ok = true;
    for (int i = 0; i < 20; ++i) {
        const auto profile = testing::random_profile(rng);
        auto params = testing::random_params(rng, /*with_bribes=*/false);
        const auto region = pricing::feasible_bribe_region(profile, params, 0);
        long mismatches = 0;
        for (int a = 0; a < 50; ++a) {
            for (int b = 0; b < 50; ++b) {
                params.eps1 = a / 49.0;
                params.eps2 = b / 49.0;
                const double level = region.a1 * params.eps1 + region.a2 * params.eps2;
                if (std::fabs(level - region.ceiling) > 1e-9) {
                    const double extra = attacker_extra_reward(profile, params);
                    if ((level < region.ceiling) != (extra > 0.0)) ++mismatches;
                }
                if (std::fabs(level - region.floor) > 1e-9) {
                    const double extra = target_extra_reward(profile, params);
                    if ((level > region.floor) != (extra > 0.0)) ++mismatches;
                }
            }
        }
        if (mismatches != 0) {
            std::printf("  config %d: %ld sign mismatches\n", i, mismatches);
            ok = false;
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 5. Inside the workable price window, paired runs show both sides gaining
//    at 99% one-sided confidence.
bool criterion5()
{
    Rng rng(505);
    bool ok = true;
    int configs_tested = 0;
    int attempts = 0;
    while (configs_tested < 4 && attempts < 4000) {
        ++attempts;
        const double alpha = 0.25 + 0.2 * rng.next_unit();
        const double beta = 0.04 + 0.08 * rng.next_unit();
        const double eta = 0.02 + 0.08 * rng.next_unit();
        const auto profile = make_power_profile(alpha, beta, eta);
        AttackParams params;
        params.r1 = 0.6 + 0.35 * rng.next_unit();
        params.r2 = 0.6 + 0.35 * rng.next_unit();
        params.gamma = 0.4 * rng.next_unit();
        const auto region = pricing::feasible_bribe_region(profile, params, 3);
        if (!region.reachable || region.sample_points.size() < 3) continue;
        ++configs_tested;

        for (const auto& [e1, e2] : region.sample_points) {
            mc::SimConfig cfg;
            cfg.profile = profile;
            cfg.params = params;
            cfg.params.eps1 = e1;
            cfg.params.eps2 = e2;
            cfg.n_rounds = 1'000'000;
            cfg.seed = 500 + configs_tested;
            const auto run = mc::simulate_paired(cfg, mc::Strategy::Bmpaw, mc::Strategy::Paw);
            const double za = run.diff_z(mc::kAttacker);
            const double zt = run.diff_z(mc::kTarget);
            const bool point_ok = za > stats::kZ99OneSided && zt > stats::kZ99OneSided;
            std::printf("  alpha=%.3f beta=%.3f eps=(%.3f,%.3f): z_attacker=%.2f z_target=%.2f %s\n",
                        alpha, beta, e1, e2, za, zt, point_ok ? "ok" : "NOT POSITIVE");
            ok = ok && point_ok;
        }
    }
    if (configs_tested < 4) {
        std::printf("  could not find enough workable-price configurations\n");
        return false;
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 6. Solver against the 401x401 oracle on 100 random configs; first-order
//    residual at interior optima below 1e-5.
bool criterion6()
{
    Rng rng(606);
    bool ok = true;
    double worst_gap = 0.0, worst_kkt = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto profile = testing::random_profile(rng);
        const auto params = testing::random_params(rng);
        opt::SolverConfig solver;
        solver.oracle_resolution = 201;
        const auto result = opt::optimize_infiltration(profile, params, solver);
        const auto oracle =
            opt::grid_oracle(profile, params, opt::Objective::NetOfBribes, 401);
        const double gap = std::fabs(result.reward_at_opt - oracle.reward_at_opt);
        worst_gap = std::max(worst_gap, gap);
        if (gap > 1e-4) {
            std::printf("  config %d: solver/oracle gap %.2e\n", i, gap);
            ok = false;
        }
        const bool interior = result.r1_hat > 1e-3 && result.r1_hat < 1.0 - 1e-3 &&
                              result.r2_hat > 1e-3 && result.r2_hat < 1.0 - 1e-3;
        if (interior) {
            const auto kkt = opt::kkt_residuals(profile, params, opt::Objective::NetOfBribes,
                                                result.r1_hat, result.r2_hat);
            worst_kkt = std::max(worst_kkt, kkt.max_residual());
            if (kkt.max_residual() > 1e-5) {
                std::printf("  config %d: interior first-order residual %.2e\n", i,
                            kkt.max_residual());
                ok = false;
            }
        }
    }
    std::printf("  worst oracle gap %.2e, worst interior residual %.2e\n", worst_gap, worst_kkt);
    return ok;
}

// ---------------------------------------------------------------------------
// 7. Two-pool table: symmetric full-power cell lands on (0,0) within 0.02;
//    the pool-2 gain pattern across its power matches (-, 0, +, +) with a
//    0.05 zero band. Published point values are reconciliation targets at
//    +-0.15; larger deviations are reported here, never hidden.
bool criterion7()
{
    const std::array<double, 4> alpha2 = {0.1, 0.2, 0.3, 0.4};
    const std::array<double, 3> cs = {0.2, 0.6, 1.0};
    // Published table, rows by alpha2, columns by c. The first pool-2 row is
    // sign-normalized to the stated (-,0,+,+) pattern; the source prints its
    // middle entry with a stray plus sign.
    const double published_rer1[4][3] = {{0.9810, 0.9982, 1.0155},
                                         {-0.0177, -0.0089, 0.0},
                                         {-0.3491, -0.3441, -0.3392},
                                         {-0.5163, -0.5134, -0.5104}};
    const double published_rer2[4][3] = {{-0.4952, -0.4995, -0.5038},
                                         {0.01808, 0.0090, 0.0},
                                         {0.5364, 0.5248, 0.5132},
                                         {1.0678, 1.0550, 1.0424}};
    // Zero-band for sign classification: 0.02, the criterion's stated cell
    // tolerance; it also classifies the published near-zero symmetric cells
    // (up to 0.018) as zero, so the published table maps to the expected
    // pattern under the same rule.
    constexpr double kZeroBand = 0.02;

    game::NashConfig nash;
    bool ok = true;
    double rer1_cells[4][3], rer2_cells[4][3];
    for (std::size_t row = 0; row < alpha2.size(); ++row) {
        for (std::size_t col = 0; col < cs.size(); ++col) {
            const auto eq = game::nash_equilibrium(
                game::make_game_config(0.2, alpha2[row], cs[col]), nash);
            if (!eq.converged) {
                // Cycling is reported, not fatal; the cell carries the
                // damped iteration's resting point and its residual.
                std::printf("  cell alpha2=%.1f c=%.1f did not settle (unilateral gain %.1e)\n",
                            alpha2[row], cs[col], eq.residual_improvement);
            }
            rer1_cells[row][col] = eq.rer1;
            rer2_cells[row][col] = eq.rer2;
        }
    }

    // Hard checks.
    const double sym1 = rer1_cells[1][2], sym2 = rer2_cells[1][2];
    if (std::fabs(sym1) > 0.02 || std::fabs(sym2) > 0.02) {
        std::printf("  symmetric cell at c=1: (%.4f, %.4f) exceeds |0.02|\n", sym1, sym2);
        ok = false;
    }
    const char expected_pattern[4] = {'-', '0', '+', '+'};
    bool pattern_ok = true;
    for (std::size_t col = 0; col < cs.size(); ++col) {
        for (std::size_t row = 0; row < alpha2.size(); ++row) {
            const double v = rer2_cells[row][col];
            const char sign = std::fabs(v) <= kZeroBand ? '0' : (v > 0 ? '+' : '-');
            if (sign != expected_pattern[row]) {
                std::printf("  pool-2 sign at alpha2=%.1f c=%.1f is %c (value %.4f), want %c\n",
                            alpha2[row], cs[col], sign, v, expected_pattern[row]);
                pattern_ok = false;
            }
        }
    }
    if (!pattern_ok) {
        std::printf(
            "  note: in this unit-reward reconstruction every withheld block belongs to the\n"
            "  opponent pool and outside miners keep their first finds, so mutual attack\n"
            "  leaks reward off the c=1 slice and both pools land below honest; the\n"
            "  published cells (e.g. pool-2 reward 0.82 with 40%% outside power) sum past\n"
            "  what one block per round can pay, so their sign pattern is not reachable\n"
            "  here. Details in the per-cell report above.\n");
        ok = false;
    }

    // Reconciliation report against the published cells.
    std::printf("  reconciliation vs published values (|delta| <= 0.15 marked ok):\n");
    for (std::size_t row = 0; row < alpha2.size(); ++row) {
        for (std::size_t col = 0; col < cs.size(); ++col) {
            const double d1 = std::fabs(rer1_cells[row][col] - published_rer1[row][col]);
            const double d2 = std::fabs(rer2_cells[row][col] - published_rer2[row][col]);
            std::printf(
                "    alpha2=%.1f c=%.1f: rer1 %+0.4f (pub %+0.4f, d=%.3f %s) rer2 %+0.4f "
                "(pub %+0.4f, d=%.3f %s)\n",
                alpha2[row], cs[col], rer1_cells[row][col], published_rer1[row][col], d1,
                d1 <= 0.15 ? "ok" : "deviation reported", rer2_cells[row][col],
                published_rer2[row][col], d2, d2 <= 0.15 ? "ok" : "deviation reported");
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 8. Optimal-split table reconciliation: run the documented search over the
//    unreported knobs and state the best match and residual.
bool criterion8()
{
    experiment::Scenario scenario;
    scenario.id = "table1";
    scenario.table1 = experiment::Table1Block{};
    experiment::RunOptions options;
    options.out_dir = fs::temp_directory_path() / "bmpaw_acceptance_table1";
    fs::create_directories(options.out_dir);

    const auto table = experiment::emit_table1(scenario, options);
    std::printf("  best provenance: %s\n", table.provenance.c_str());
    std::printf("  anchor residual (max over both coordinates): %.4f -> %s\n",
                table.anchor_residual,
                table.anchor_residual <= 0.02 ? "reproduced within 0.02"
                                              : "best-found match reported");
    // Per the criterion, either outcome passes as long as it is reported;
    // the search itself must have produced a finite answer.
    return std::isfinite(table.anchor_residual) && !table.records.empty();
}

// ---------------------------------------------------------------------------
// 9. Surface trends: attacker gain never increases, target gain never
//    decreases along either bribe axis (20x20 grids, 10 random configs).
bool criterion9()
{
    Rng rng(909);
    bool ok = true;
    for (int i = 0; i < 10; ++i) {
        const auto profile = testing::random_profile(rng);
        auto params = testing::random_params(rng, /*with_bribes=*/false);
        double attacker[20][20], target[20][20];
        for (int a = 0; a < 20; ++a) {
            for (int b = 0; b < 20; ++b) {
                params.eps1 = a / 19.0;
                params.eps2 = b / 19.0;
                const auto breakdown = attacker_reward_bmpaw(profile, params);
                attacker[a][b] = rer(breakdown.total_bmpaw, breakdown.total_paw);
                target[a][b] = rer(target_reward_bmpaw(profile, params),
                                   target_reward_paw(profile, params));
            }
        }
        for (int a = 0; a < 20; ++a) {
            for (int b = 0; b < 20; ++b) {
                if (a > 0 && (attacker[a][b] > attacker[a - 1][b] + 1e-12 ||
                              target[a][b] < target[a - 1][b] - 1e-12)) {
                    ok = false;
                }
                if (b > 0 && (attacker[a][b] > attacker[a][b - 1] + 1e-12 ||
                              target[a][b] < target[a][b - 1] - 1e-12)) {
                    ok = false;
                }
            }
        }
        if (!ok) {
            std::printf("  config %d: monotonicity violated\n", i);
            break;
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 10. Rerunning any scenario with the same seed and different thread counts
//     produces byte-identical outputs.
bool criterion10()
{
    if (g_cli_path.empty()) {
        std::printf("  pass --cli <path to the command line binary>\n");
        return false;
    }
    const fs::path base = fs::temp_directory_path() / "bmpaw_acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base);
    const fs::path config = base / "scenario.json";
    {
        std::ofstream out(config);
        out << R"({
  "id": "det",
  "profile": {"alpha": 0.3, "beta": 0.1, "eta": 0.05},
  "params": {"r1": 0.8, "r2": 0.8, "gamma": 0.2, "eps1": 0.02, "eps2": 0.3},
  "sweep": [{"param": "eps1", "values": [0.01, 0.02, 0.03, 0.04]}],
  "outputs": ["attacker_rer", "target_rer", "attacker_rer_mc", "target_rer_mc"],
  "simulation": {"n_rounds": 200000, "seed": 9}
})";
    }
    auto run = [&](const char* sub, const std::string& out_dir, int threads) {
        std::ostringstream cmd;
        cmd << '"' << g_cli_path << '"' << ' ' << sub << " --config " << config
            << " --out-dir " << out_dir << " --threads " << threads << " >/dev/null 2>&1";
        return std::system(cmd.str().c_str());
    };
    auto slurp = [&](const std::string& dir, const char* name) {
        std::ifstream in(fs::path(dir) / name, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };

    bool ok = true;
    const std::string dir1 = (base / "one").string(), dir4 = (base / "four").string();
    if (run("sweep", dir1, 1) != 0 || run("sweep", dir4, 4) != 0) {
        std::printf("  sweep invocation failed\n");
        return false;
    }
    for (const char* name : {"det.csv", "det.json"}) {
        const auto a = slurp(dir1, name), b = slurp(dir4, name);
        if (a.empty() || a != b) {
            std::printf("  %s differs between thread counts\n", name);
            ok = false;
        }
    }

    const std::string sim1 = (base / "sim1").string(), sim4 = (base / "sim4").string();
    if (run("simulate", sim1, 1) != 0 || run("simulate", sim4, 4) != 0) {
        std::printf("  simulate invocation failed\n");
        return false;
    }
    const auto a = slurp(sim1, "det.csv"), b = slurp(sim4, "det.csv");
    if (a.empty() || a != b) {
        std::printf("  simulate output differs between thread counts\n");
        ok = false;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv)
{
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
        if (arg == "--cli" && i + 1 < argc) g_cli_path = argv[++i];
    }

    const std::vector<Criterion> criteria = {
        {1, "honest baseline: analytic exact, simulation within 3 se", criterion1},
        {2, "case probabilities conserve and fit at significance 0.001", criterion2},
        {3, "optimized reward is at least the honest reward (500 configs)", criterion3},
        {4, "price-window classification matches reward signs exactly", criterion4},
        {5, "workable prices benefit both sides at 99% confidence", criterion5},
        {6, "solver within 1e-4 of the 401-grid oracle; residuals <= 1e-5", criterion6},
        {7, "two-pool table: symmetric cell and pool-2 sign pattern", criterion7},
        {8, "optimal-split table reconciliation reported", criterion8},
        {9, "attacker surface falls, target surface rises along bribe axes", criterion9},
        {10, "identical outputs across thread counts", criterion10},
    };

    bool all_ok = true;
    for (const auto& criterion : criteria) {
        if (only != 0 && criterion.id != only) continue;
        std::printf("criterion %d: %s\n", criterion.id, criterion.summary);
        const bool ok = criterion.run();
        std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion.id,
                    criterion.summary);
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
