#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mprox/cli.hpp"
#include "mprox/errors.hpp"

using namespace mprox;
using namespace mprox::cli;
using nlohmann::json;

namespace {

std::string scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("mprox_cli_" + name);
    std::filesystem::remove_all(dir);
    return dir.string();
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("solve rejects bad configurations")
{
    std::ostringstream out, err;
    ExperimentConfig cfg;
    cfg.env = "counterexample";
    cfg.out = scratch("bad");
    cfg.solvers.clear();
    CHECK(cmd_solve(cfg, out, err) == kConfigError);
    cfg.solvers = {"simplex"};
    CHECK(cmd_solve(cfg, out, err) == kConfigError);
    cfg.solvers = {"mirror_prox"};
    cfg.checkpoint_every = cfg.iters + 1;
    CHECK(cmd_solve(cfg, out, err) == kConfigError);
    cfg.checkpoint_every = 100;
    cfg.env = "maze";
    CHECK(cmd_solve(cfg, out, err) == kConfigError);

    ExperimentConfig c2;
    CHECK_THROWS_AS(apply_config_json(c2, json{{"no_such_key", 1}}), ConfigError);
    apply_config_json(c2, json{{"env", "chain"}, {"length", 20}, {"checkpoint_every", 5}});
    CHECK(c2.env == "chain");
    CHECK(c2.chain.length == 20);
    CHECK(c2.checkpoint_every == 5);
}

TEST_CASE("counterexample subcommand")
{
    std::ostringstream out, err;
    CHECK(cmd_counterexample(0.1, out, err) == kOk);
    const json j = json::parse(out.str());
    CHECK(j["duality_gap"].get<double>() == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(j["reward_gap"].get<double>() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(cmd_counterexample(0.0, out, err) == kOk);
    CHECK(cmd_counterexample(1.5, out, err) == kConfigError);
}

TEST_CASE("check subcommand exit codes")
{
    std::ostringstream out, err;
    ExperimentConfig cfg;
    cfg.env = "counterexample";
    cfg.out = scratch("check");
    CHECK(cmd_check(cfg, out, err) == kCheckFailed);
    const json rep = json::parse(slurp(cfg.out + "/report.json"));
    CHECK(rep["coherence"]["witness_index"] == 0);
    CHECK_FALSE(rep["holds"].get<bool>());

    cfg.feature_set = "identity";
    CHECK(cmd_check(cfg, out, err) == kOk);

    cfg.env = "chain";
    cfg.feature_set = "default";
    CHECK(cmd_check(cfg, out, err) == kOk);
    std::filesystem::remove_all(cfg.out);
}

TEST_CASE("export then solve from files reproduces the run")
{
    std::ostringstream out, err;
    ExperimentConfig cfg;
    cfg.env = "chain";
    cfg.iters = 200;
    cfg.checkpoint_every = 20;
    cfg.solvers = {"mirror_prox", "mirror_descent"};
    cfg.out = scratch("direct");
    REQUIRE(cmd_solve(cfg, out, err) == kOk);
    CHECK(cmd_export(cfg, out, err) == kOk);

    ExperimentConfig from_files = cfg;
    from_files.env.clear();
    from_files.mdp_path = cfg.out + "/mdp.json";
    from_files.features_path = cfg.out + "/features.json";
    from_files.out = scratch("files");
    REQUIRE(cmd_solve(from_files, out, err) == kOk);
    for (const char* f : {"/mirror_prox.csv", "/mirror_descent.csv"}) {
        const std::string a = slurp(cfg.out + f);
        CHECK_FALSE(a.empty());
        CHECK(a == slurp(from_files.out + f));
    }
    const json summary = json::parse(slurp(cfg.out + "/summary.json"));
    CHECK(summary["solvers"].contains("mirror_prox"));
    std::filesystem::remove_all(cfg.out);
    std::filesystem::remove_all(from_files.out);
}

TEST_CASE("gridworld export")
{
    std::ostringstream out, err;
    ExperimentConfig cfg;
    cfg.env = "gridworld";
    cfg.grid.side = 3;
    cfg.out = scratch("grid");
    REQUIRE(cmd_export(cfg, out, err) == kOk);
    const json m = json::parse(slurp(cfg.out + "/mdp.json"));
    CHECK(m["num_states"] == 9);
    CHECK(m["num_actions"] == 4);
    std::filesystem::remove_all(cfg.out);
}
