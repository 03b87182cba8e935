#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mprox/envs.hpp"

namespace mprox::cli {

/// Exit codes shared by all subcommands.
enum Exit : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kSolverError = 3 };

struct ExperimentConfig {
    std::string env;           ///< counterexample | gridworld | chain; empty when mdp_path is set
    std::string mdp_path;
    std::string features_path;
    std::string feature_set = "default"; ///< default | identity
    std::optional<double> eta;
    int iters = 1000;
    int checkpoint_every = 100;
    std::vector<std::string> solvers{"mirror_prox"};
    std::string out = ".";
    std::uint64_t seed = 1;
    double epsilon = 0.1;

    GridworldSpec grid;
    ChainSpec chain;

    double vi_tol = 1e-3;
    int vi_max_iter = 1000000;
    int mixing_samples = 200;
    double tol = 1e-8;
    std::optional<double> u_cap;
};

/// Applies config-file keys (flag names with underscores); unknown keys raise ConfigError.
void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& j);

int cmd_solve(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_check(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_counterexample(double epsilon, std::ostream& out, std::ostream& err);
int cmd_export(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

int run_main(int argc, char** argv);

} // namespace mprox::cli
