#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mprox/envs.hpp"
#include "mprox/errors.hpp"
#include "mprox/io.hpp"
#include "oracles.hpp"

using namespace mprox;
using nlohmann::json;

TEST_CASE("MDP JSON round trip is exact")
{
    Rng rng(3);
    const Mdp m = oracle::random_mdp(rng, 4, 3);
    const Mdp back = mdp_from_json(json::parse(mdp_to_json(m).dump()));
    CHECK(back.transitions() == m.transitions());
    CHECK(back.rewards() == m.rewards());
    CHECK_FALSE(back.reward_range_relaxed());

    const auto cx = build_counterexample();
    const Mdp relaxed = mdp_from_json(json::parse(mdp_to_json(cx.mdp).dump()));
    CHECK(relaxed.reward_range_relaxed());
    CHECK(relaxed.rewards() == cx.mdp.rewards());
}

TEST_CASE("feature JSON round trip is exact")
{
    const Mdp m = build_chain(ChainSpec{});
    const FeatureMaps fm = build_chain_features(m, ChainSpec{}, solve_exact(m));
    const FeatureMaps back = features_from_json(json::parse(features_to_json(fm).dump()));
    CHECK(back.f() == fm.f());
    CHECK(back.w() == fm.w());
}

TEST_CASE("malformed inputs are rejected")
{
    CHECK_THROWS_AS(mdp_from_json(json::parse(R"({"num_states": 2})")), InvalidModel);
    CHECK_THROWS_AS(mdp_from_json(json::parse(
                        R"({"num_states":1,"num_actions":1,"transitions":[[[0.5]]],"rewards":[[0]]})")),
                    InvalidModel);
    CHECK_THROWS_AS(mdp_from_json(json::parse(
                        R"({"num_states":1,"num_actions":1,"transitions":[[[1.0]]],"rewards":[[2.0]]})")),
                    InvalidModel);
    CHECK_THROWS_AS(mdp_from_json(json::parse(
                        R"({"num_states":2,"num_actions":1,"transitions":[[[1.0, 0.0]]],"rewards":[[0]]})")),
                    InvalidModel);
    CHECK_THROWS_AS(features_from_json(json::parse(R"({"f": [[1, 2], [3]], "w": [[1]]})")), InvalidModel);
    CHECK_THROWS_AS(load_json("/nonexistent/path.json"), ConfigError);
}

TEST_CASE("trace CSV format")
{
    SolveTrace tr;
    Checkpoint cp;
    cp.t = 10;
    cp.gap_vs_ref = 0.1;
    cp.suboptimality = 1.0 / 3.0;
    cp.flow_residual_l1 = 0.0;
    cp.bound_rhs = std::nan("");
    cp.rho_t = 2.0;
    tr.checkpoints.push_back(cp);
    const std::string csv = trace_to_csv(tr);
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "t,gap,suboptimality,flow_residual_l1,bound_rhs,rho_t");
    CHECK(row == "10,0.10000000000000001,0.33333333333333331,0,nan,2");
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("atomic writes replace the target")
{
    const auto dir = std::filesystem::temp_directory_path() / "mprox_io_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "out.txt").string();
    write_file_atomic(path, "first\n");
    write_file_atomic(path, "second\n");
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "second");
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
    std::filesystem::remove_all(dir);
}
