#pragma once

#include "mprox/linalg.hpp"

namespace mprox {

/**
 * Finite average-reward MDP with dense storage.
 *
 * Transitions are held as an (|X||A|) x |X| matrix whose row x*|A| + a is
 * P(.|x,a); rewards use the same flattened (x,a) order.
 */
class Mdp {
public:
    Mdp(int num_states, int num_actions, Mat transitions, Vec rewards,
        bool reward_range_relaxed = false);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int num_pairs() const { return num_states_ * num_actions_; }
    int pair(int x, int a) const { return x * num_actions_ + a; }

    const Mat& transitions() const { return p_; }
    const Vec& rewards() const { return r_; }
    double prob(int x, int a, int xn) const { return p_(pair(x, a), xn); }
    double reward(int x, int a) const { return r_(pair(x, a)); }
    bool reward_range_relaxed() const { return relaxed_; }
    double max_abs_reward() const { return r_.cwiseAbs().maxCoeff(); }

    /// Copy with rewards multiplied by `factor`.
    Mdp scaled(double factor) const;

private:
    int num_states_;
    int num_actions_;
    Mat p_;
    Vec r_;
    bool relaxed_;
};

/// pi(x, a); rows are distributions over actions.
using Policy = Mat;

Policy deterministic_policy(const std::vector<int>& actions, int num_actions);
void validate_policy(const Policy& pi, int num_states, int num_actions);

/// Q_{(x,a),x'} = P(x'|x,a) - 1{x'=x}.
Mat build_q_matrix(const Mdp& mdp);

Mat policy_transition_matrix(const Mdp& mdp, const Policy& pi);

/**
 * Stationary distribution of a row-stochastic matrix.
 * Throws NonUniqueStationary when the null space of P^T - I has dimension > 1.
 */
Vec stationary_distribution(const Mat& p_pi);

/// mu(x,a) = d(x) pi(a|x), flattened.
Vec occupancy_from_policy(const Mdp& mdp, const Policy& pi);

double average_reward(const Mdp& mdp, const Policy& pi);

/// Row-normalizes mu over actions; zero-mass states get uniform rows.
Policy extract_policy(const Vec& mu, int num_states, int num_actions);

/// ||Q^T mu||_1.
double flow_residual(const Mat& q, const Vec& mu);

/// sum_a pi(a|x) r(x,a).
Vec policy_rewards(const Mdp& mdp, const Policy& pi);

} // namespace mprox
