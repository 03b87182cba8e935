#pragma once

#include <array>
#include <cstdint>

#include "mprox/exact.hpp"
#include "mprox/saddle.hpp"

namespace mprox {

/// Actions are a_l = 0 and a_r = 1. x1 and x3 have one real action, stored twice.
struct Counterexample {
    Mdp mdp;
    FeatureMaps features;
    OptimalSolution opt;
    /// Flat (x,a) indices of (x1,a_r), (x2,a_l), (x2,a_r), (x3,a_l).
    std::array<int, 4> effective_pairs;
};

Counterexample build_counterexample();

/// y_eps = (1 - eps, eps, 0, 0) over the effective pairs.
Vec counterexample_y_eps(double eps);

struct GridworldSpec {
    int side = 10;
    int reward_state = 0;
    double success_prob = 0.9;
};

enum GridAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

/// Torus grid, state = row * side + col; every action from the reward state teleports.
Mdp build_gridworld(const GridworldSpec& spec);

struct ChainSpec {
    int length = 10;
    double success_prob = 0.7;
    int num_clusters = 3;
    int num_random_w_rows = 2;
    int num_random_f_cols = 3;
    std::uint64_t seed = 1;
    /// Rewards 1{x = x1} instead of L 1{x = x1}.
    bool normalized_rewards = false;
};

/// Action 0 moves left, 1 moves right; x1 jumps to x_L, x_L moves left.
Mdp build_chain(const ChainSpec& spec);

/// Factor that converts chain rewards back to the L 1{x = x1} scale.
double chain_reward_scale(const ChainSpec& spec);

/**
 * Cluster-indicator and random rows for W (on real state-action pairs only), plus mu*
 * when it is not already representable. F holds v*, a basis of the span of
 * Q^T W^T e_m, and random columns. Throws ConstructionFailed if realizability fails.
 */
FeatureMaps build_chain_features(const Mdp& mdp, const ChainSpec& spec, const OptimalSolution& opt);

} // namespace mprox
