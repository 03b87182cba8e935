#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mprox/exact.hpp"
#include "mprox/saddle.hpp"

namespace mprox {

enum class Variant { MirrorProx, MirrorDescent };

struct SolverConfig {
    double eta = 0.25;
    int num_iters = 1000;
    int checkpoint_every = 100;
    Variant variant = Variant::MirrorProx;
    long long seed = 0; ///< reserved; runs are deterministic
};

void validate_config(const SolverConfig& cfg);

struct BoundParams {
    double tau_mix = 1.0;
    double u_bound = 1.0;
    /// Suboptimality is divided by this before comparison (rewards outside [0,1]).
    double reward_scale = 1.0;
};

struct Checkpoint {
    int t = 0;
    Vec u_bar;
    Vec y_bar;
    Policy policy;
    double rho_t = 0.0;
    double suboptimality = 0.0;
    double gap_vs_ref = 0.0;
    double flow_residual_l1 = 0.0;
    double bound_rhs = 0.0;
    bool bound_violated = false;
    /// Policy extracted from the current (non-averaged) y.
    double last_rho = 0.0;
    double last_suboptimality = 0.0;
    std::string eval_error; ///< set when exact policy evaluation failed at this checkpoint
};

struct SolveTrace {
    std::vector<Checkpoint> checkpoints;
    Iterate final_iterate;
    bool bounds_checked = false;
    int bound_violations = 0;
    std::vector<std::string> warnings;
};

using StepObserver =
    std::function<void(int t, const Iterate& z_t, const Iterate& z_hat, const Iterate& z_next)>;

struct RunOptions {
    std::optional<OptimalSolution> reference;
    /// Saddle point of the relaxed problem; lifted from `reference` for identity features when unset.
    std::optional<Iterate> saddle_reference;
    std::optional<BoundParams> bounds;
    StepObserver observer;
};

/// Extrapolation and committed Mirror Prox points from z_t.
std::pair<Iterate, Iterate> mirror_prox_step(const RelaxedProblem& prob, const Iterate& z_t, double eta);

Iterate mirror_descent_step(const RelaxedProblem& prob, const Iterate& z_t, double eta);

/// u = 0, y uniform.
Iterate initial_iterate(const RelaxedProblem& prob);

/// 1 / (4 max(K, 1)).
double default_step_size(const RelaxedProblem& prob);

bool is_identity_features(const FeatureMaps& features);

SolveTrace run(const RelaxedProblem& prob, const SolverConfig& config, const RunOptions& opts = {});

} // namespace mprox
