// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bmpaw/experiment.hpp"

using namespace bmpaw;
namespace fs = std::filesystem;

namespace {

std::string minimal_scenario(const std::string& extra = "")
{
    return std::string(R"({
  "id": "t",
  "profile": {"alpha": 0.2, "beta": 0.2, "eta": 0.2},
  "params": {"r1": 0.5, "r2": 0.5, "gamma": 0.5, "eps1": 0.05, "eps2": 0.05})") +
           (extra.empty() ? "" : ",\n" + extra) + "\n}";
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    TempDir(const char* name) : path(fs::temp_directory_path() / name)
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE_BEGIN("experiment");

TEST_CASE("scenario parsing accepts the minimal form")
{
    const auto s = experiment::parse_scenario(minimal_scenario());
    CHECK(s.id == "t");
    CHECK(s.alpha == 0.2);
    CHECK(s.params.eps1 == 0.05);
    CHECK(s.params.rbar_policy == RbarPolicy::Mean);
}

TEST_CASE("schema violations carry locations")
{
    // Parse error reports line:column.
    try {
        experiment::parse_scenario("{\n  \"id\": \"x\",\n  bad\n}");
        FAIL("expected a parse error");
    } catch (const experiment::ConfigError& err) {
        CHECK(err.location().find("3:") == 0);
    }

    CHECK_THROWS_AS(experiment::parse_scenario("{\"id\": \"x\"}"), experiment::ConfigError);

    try {
        experiment::parse_scenario(minimal_scenario(
            R"("sweep": [{"param": "volume", "values": [0.1]}], "outputs": ["attacker_rer"])"));
        FAIL("expected a schema error");
    } catch (const experiment::ConfigError& err) {
        CHECK(err.location() == "/sweep/0/param");
    }

    // Out-of-range profile.
    CHECK_THROWS_AS(experiment::parse_scenario(
                        R"({"id": "x", "profile": {"alpha": 0.6, "beta": 0.1, "eta": 0.1}})"),
                    experiment::ConfigError);

    // Unknown metric.
    CHECK_THROWS_AS(experiment::parse_scenario(minimal_scenario(R"("outputs": ["mystery"])")),
                    experiment::ConfigError);
}

TEST_CASE("sweeps reject empty axis lists")
{
    const auto s = experiment::parse_scenario(minimal_scenario(R"("outputs": ["attacker_rer"])"));
    experiment::RunOptions options;
    CHECK_THROWS_AS(experiment::sweep_records(s, options), experiment::ConfigError);

    CHECK_THROWS_AS(experiment::parse_scenario(minimal_scenario(
                        R"("sweep": [{"param": "eps1", "values": []}])")),
                    experiment::ConfigError);
}

TEST_CASE("sweep output is complete, ordered and reproducible")
{
    TempDir dir("bmpaw_sweep_test");
    const auto s = experiment::parse_scenario(minimal_scenario(R"("sweep": [
      {"param": "eps1", "values": [0.0, 0.05, 0.1]},
      {"param": "eps2", "values": [0.0, 0.1]}
    ],
    "outputs": ["attacker_rer", "target_rer"])"));

    experiment::RunOptions options;
    options.out_dir = dir.path;
    REQUIRE(experiment::run_scenario(s, options) == experiment::kExitOk);

    const auto csv = read_file(dir.path / "t.csv");
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == std::string(experiment::kCsvHeader));
    int rows = 0;
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 3 * 2 * 2);

    // Byte-identical rerun, also under a different thread count.
    options.threads = 4;
    REQUIRE(experiment::run_scenario(s, options) == experiment::kExitOk);
    CHECK(read_file(dir.path / "t.csv") == csv);
    const auto json_text = read_file(dir.path / "t.json");
    CHECK(json_text.find("\"records\"") != std::string::npos);
}

TEST_CASE("attacker surface falls and target surface rises along the bribe axes")
{
    const auto s = experiment::parse_scenario(minimal_scenario(R"("sweep": [
      {"param": "eps1", "values": [0.0, 0.2, 0.4, 0.6, 0.8]}
    ],
    "outputs": ["attacker_rer", "target_rer"])"));
    experiment::RunOptions options;
    const auto records = experiment::sweep_records(s, options);
    double prev_attacker = 1e9, prev_target = -1e9;
    for (const auto& rec : records) {
        if (rec.metric == "attacker_rer") {
            CHECK(rec.value <= prev_attacker + 1e-12);
            prev_attacker = rec.value;
        } else {
            CHECK(rec.value >= prev_target - 1e-12);
            prev_target = rec.value;
        }
    }
}

TEST_CASE("float formatting uses ten significant digits")
{
    CHECK(experiment::format_double(1.0 / 3.0) == "0.3333333333");
    CHECK(experiment::format_double(0.2) == "0.2");
    CHECK(experiment::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("validation passes on an honest scenario and fails when corrupted")
{
    const auto s = experiment::parse_scenario(
        R"({"id": "v", "profile": {"alpha": 0.2, "beta": 0.2, "eta": 0.2},
            "params": {"r1": 0.0, "r2": 0.0, "gamma": 0.5},
            "simulation": {"n_rounds": 200000, "seed": 3}})");
    experiment::RunOptions options;
    options.quiet = true;

    const auto report = experiment::validate_scenario(s, options);
    CHECK(report.all_pass);
    for (const auto& row : report.rows) {
        if (row.metric == "attacker_reward_bmpaw" || row.metric == "attacker_reward_paw") {
            CHECK(row.analytic == doctest::Approx(0.2).epsilon(1e-12));
        }
    }

    const auto corrupted = experiment::validate_scenario(
        s, options, {{"attacker_reward_bmpaw", 0.25}});
    CHECK_FALSE(corrupted.all_pass);
}

TEST_CASE("validation passes on a full attack scenario")
{
    const auto s = experiment::parse_scenario(
        R"({"id": "v2", "profile": {"alpha": 0.2, "beta": 0.2, "eta": 0.2},
            "params": {"r1": 0.5, "r2": 0.5, "gamma": 0.5, "eps1": 0.05, "eps2": 0.05},
            "simulation": {"n_rounds": 400000, "seed": 11}})");
    experiment::RunOptions options;
    options.quiet = true;
    const auto report = experiment::validate_scenario(s, options);
    CHECK(report.all_pass);
    CHECK(report.rbar_hat == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("analytic records cover the point summary")
{
    const auto s = experiment::parse_scenario(minimal_scenario());
    const auto records = experiment::analytic_records(s);
    bool saw_total = false;
    for (const auto& rec : records) {
        if (rec.metric == "attacker_reward_bmpaw") {
            saw_total = true;
            CHECK(rec.value > 0.19);
        }
        CHECK(rec.scenario_id == "t");
    }
    CHECK(saw_total);
}

TEST_CASE("game records carry the equilibrium table")
{
    const auto s = experiment::parse_scenario(minimal_scenario(
        R"("game": {"alpha1": 0.2, "alpha2_values": [0.2], "c_values": [1.0]})"));
    experiment::RunOptions options;
    const auto records = experiment::emit_table2(s, options);
    bool saw_rer2 = false;
    for (const auto& rec : records) {
        if (rec.metric == "rer2") {
            saw_rer2 = true;
            CHECK(std::fabs(rec.value) <= 0.02);
        }
    }
    CHECK(saw_rer2);
}

TEST_SUITE_END();
