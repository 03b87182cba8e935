#pragma once

#include <optional>
#include <vector>

#include "mprox/exact.hpp"
#include "mprox/saddle.hpp"

namespace mprox {

struct RealizabilityRecord {
    bool holds = false;
    double v_residual = 0.0;
    double y_residual = 0.0;
    Vec u_star;
    Vec y_star;
    double shift = 0.0;     ///< c in F u* = v* + c 1
    double u_bound_U = 0.0; ///< ||u*||_inf / tau_mix
};

struct CoherenceRecord {
    bool holds = false;
    double max_vertex_residual = 0.0;
    std::optional<int> witness_index;
    std::vector<double> vertex_residuals;
    double max_coefficient_linf = 0.0; ///< largest ||c_m||_inf of the minimal-norm fits
    bool within_u_cap = false;
};

enum class MixingMode { Strict, Lenient };

struct ErgodicityRecord {
    double tau_mix_estimate = 0.0;
    double tau = 0.0;
    double slem_max = 0.0;
    int policies_sampled = 0;
    int non_ergodic_count = 0;
    bool enumerated = false;
    bool all_ergodic = false;
    std::vector<double> slems; ///< per evaluated policy, in evaluation order
};

struct AssumptionReport {
    RealizabilityRecord realizability;
    CoherenceRecord coherence;
    ErgodicityRecord ergodicity;
};

/// Euclidean projection onto the probability simplex.
Vec project_simplex(const Vec& v);

/// argmin over the simplex of ||W^T y - target||_2.
Vec simplex_least_squares(const Mat& w, const Vec& target, double tol = 1e-10, int max_iter = 50000);

RealizabilityRecord check_realizability(const RelaxedProblem& prob, const OptimalSolution& opt,
                                        double tol, double tau_mix = 1.0);

CoherenceRecord check_coherence(const RelaxedProblem& prob, double u_cap, double tol = 1e-8);

/// Second-largest eigenvalue modulus of a stochastic matrix.
double slem(const Mat& p);

/**
 * tau_mix = 2 (tau + 1) with tau = -1 / log(max SLEM) over deterministic policies.
 * Enumerates when |A|^|X| <= 4096, otherwise samples. Strict mode throws NotErgodic;
 * lenient mode counts non-ergodic policies and estimates over the rest.
 */
ErgodicityRecord estimate_mixing(const Mdp& mdp, int num_policy_samples, unsigned long long seed,
                                 MixingMode mode = MixingMode::Strict);

/// (11 tau^2 U^2 N + 7 log M) / (eta t)
double theorem_bound_rhs(double tau_mix, double u_bound, int n, double m, double eta, long long t);

/// (5 tau^2 U^2 N + 3 log M) / (eta t)
double flow_bound_rhs(double tau_mix, double u_bound, int n, double m, double eta, long long t);

struct RewardGapTerms {
    double reward_gap; ///< <mu, r> - rho_{pi_mu}
    double flow;       ///< ||Q^T mu||_1
};

RewardGapTerms reward_gap_terms(const Mdp& mdp, const Mat& q, const Vec& mu);

} // namespace mprox
