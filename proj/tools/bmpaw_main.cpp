// SPDX-License-Identifier: Apache-2.0
// Command line front end: scenario files in, CSV/JSON records out.
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "bmpaw/experiment.hpp"

namespace {

using namespace bmpaw;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t rounds = 0;
    bool rounds_set = false;
    std::string backend = "auto";
};

void add_common(CLI::App* cmd, CommonArgs& args)
{
    cmd->add_option("--config", args.config_path, "scenario JSON file")->required();
    cmd->add_option("--out-dir", args.out_dir, "output directory (default: .)");
    cmd->add_option("--threads", args.threads, "worker threads; never changes results")
        ->check(CLI::Range(1, 256));
    cmd->add_option("--seed", args.seed, "override the scenario seed")
        ->each([&](const std::string&) { args.seed_set = true; });
    cmd->add_option("--rounds", args.rounds, "override the simulation round count")
        ->each([&](const std::string&) { args.rounds_set = true; });
    cmd->add_option("--backend", args.backend, "kernel backend: auto|scalar|simd")
        ->check(CLI::IsMember({"auto", "scalar", "simd"}));
}

experiment::RunOptions make_options(const CommonArgs& args)
{
    experiment::RunOptions options;
    options.out_dir = args.out_dir;
    options.threads = args.threads;
    if (args.seed_set) options.seed = args.seed;
    if (args.rounds_set) options.rounds = args.rounds;
    if (args.backend == "scalar") options.backend = kernels::Backend::Scalar;
    if (args.backend == "simd") options.backend = kernels::Backend::Simd;
    return options;
}

int run_records(const CommonArgs& args,
                std::vector<experiment::Record> (*producer)(const experiment::Scenario&,
                                                            const experiment::RunOptions&),
                const char* suffix)
{
    const auto scenario = experiment::load_scenario(args.config_path);
    const auto options = make_options(args);
    const auto records = producer(scenario, options);
    std::filesystem::create_directories(options.out_dir);
    experiment::write_csv(options.out_dir / (scenario.id + suffix + std::string(".csv")),
                          records);
    experiment::write_json(options.out_dir / (scenario.id + suffix + std::string(".json")),
                           scenario, records);
    return experiment::kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"analysis toolkit for bribery-backed power-adjusting withholding attacks"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* analytic = app.add_subcommand("analytic", "closed-form metrics at one point");
    auto* optimize = app.add_subcommand("optimize", "optimal infiltration split (table mode "
                                                    "when the scenario has a table1 block)");
    auto* price = app.add_subcommand("price", "workable bribe interval and boundary picks");
    auto* simulate = app.add_subcommand("simulate", "seeded Monte Carlo run");
    auto* game = app.add_subcommand("game", "two-pool equilibrium and reward table");
    auto* sweep = app.add_subcommand("sweep", "cross-product parameter sweep");
    auto* validate = app.add_subcommand("validate", "analytic vs Monte Carlo cross-check");
    for (auto* cmd : {analytic, optimize, price, simulate, game, sweep, validate}) {
        add_common(cmd, args);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : experiment::kExitConfigError;
    }

    try {
        if (analytic->parsed()) {
            return run_records(args,
                               [](const experiment::Scenario& s, const experiment::RunOptions&) {
                                   return experiment::analytic_records(s);
                               },
                               "");
        }
        if (optimize->parsed()) {
            const auto scenario = experiment::load_scenario(args.config_path);
            const auto options = make_options(args);
            std::filesystem::create_directories(options.out_dir);
            if (scenario.table1) {
                const auto table = experiment::emit_table1(scenario, options);
                experiment::write_csv(options.out_dir / (scenario.id + "_table1.csv"),
                                      table.records);
                experiment::write_json(options.out_dir / (scenario.id + "_table1.json"),
                                       scenario, table.records);
                std::printf("provenance: %s\nanchor residual: %s\n", table.provenance.c_str(),
                            experiment::format_double(table.anchor_residual).c_str());
                return experiment::kExitOk;
            }
            return run_records(args, experiment::optimize_records, "");
        }
        if (price->parsed()) return run_records(args, experiment::price_records, "");
        if (simulate->parsed()) return run_records(args, experiment::simulate_records, "");
        if (game->parsed()) return run_records(args, experiment::game_records, "_table2");
        if (sweep->parsed()) {
            const auto scenario = experiment::load_scenario(args.config_path);
            return experiment::run_scenario(scenario, make_options(args));
        }
        if (validate->parsed()) {
            const auto scenario = experiment::load_scenario(args.config_path);
            return experiment::run_validate(scenario, make_options(args));
        }
    } catch (const experiment::ConfigError& err) {
        std::fprintf(stderr, "config error: %s\n", err.what());
        return experiment::kExitConfigError;
    } catch (const ModelError& err) {
        std::fprintf(stderr, "model error: %s\n", err.what());
        return experiment::kExitConfigError;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "internal error: %s\n", err.what());
        return experiment::kExitSolverFailure;
    }
    return experiment::kExitOk;
}
