#pragma once

#include <functional>
#include <vector>

#include "mprox/mdp.hpp"

namespace mprox {

struct OptimalSolution {
    Vec v_star;            ///< anchored so that v_star(0) == 0
    Vec mu_star;           ///< flattened (x,a)
    double rho_star = 0.0;
    Policy policy_star;
    std::vector<int> actions; ///< deterministic optimal action per state
};

/// max_x |v(x) - max_a [r(x,a) - rho + sum_x' P(x'|x,a) v(x')]|
double bellman_residual(const Mdp& mdp, const Vec& v, double rho);

/// Greedy action per state, ties to the lowest index.
std::vector<int> greedy_actions(const Mdp& mdp, const Vec& v, double tie_tol = 0.0);

/**
 * Howard policy iteration with gauge v(x0) = 0.
 * Throws NoConvergence when the iteration cap is hit or no unichain start is found.
 */
OptimalSolution solve_exact(const Mdp& mdp, int max_iter = 1000);

struct RviProgress {
    int iteration;
    double span;
    double rho_estimate;
    const Vec& v;
};

struct RviOptions {
    double damping = 1.0; ///< v <- (1-alpha) v + alpha T v
    std::function<void(const RviProgress&)> observer;
};

struct RviResult {
    Vec v;
    double rho = 0.0;
    Policy policy;
    int iterations = 0;
};

/// Relative value iteration; stops once span(Tv - v) <= tol.
RviResult relative_value_iteration(const Mdp& mdp, double tol, int max_iter,
                                   const RviOptions& opts = {});

} // namespace mprox
