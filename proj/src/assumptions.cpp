#include "mprox/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mprox/errors.hpp"
#include "mprox/random.hpp"

namespace mprox {

namespace {

constexpr double kErgodicGap = 1e-10;
constexpr long long kEnumerationLimit = 4096;

double simplex_residual(const Mat& w, const Vec& target, const Vec& y)
{
    return (w.transpose() * y - target).norm();
}

// Equality-constrained least squares restricted to a support set.
std::optional<Vec> polish(const Mat& w, const Vec& target, const std::vector<int>& support)
{
    const int k = static_cast<int>(support.size());
    if (k == 0) return std::nullopt;
    Mat ws(k, w.cols());
    for (int i = 0; i < k; ++i) ws.row(i) = w.row(support[i]);

    Mat kkt = Mat::Zero(k + 1, k + 1);
    kkt.topLeftCorner(k, k) = ws * ws.transpose();
    kkt.block(0, k, k, 1).setOnes();
    kkt.block(k, 0, 1, k).setOnes();
    Vec rhs(k + 1);
    rhs.head(k) = ws * target;
    rhs(k) = 1.0;
    const Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);

    Vec y = Vec::Zero(w.rows());
    for (int i = 0; i < k; ++i) {
        if (sol(i) < -1e-14) return std::nullopt;
        y(support[i]) = std::max(0.0, sol(i));
    }
    const double s = y.sum();
    if (!(s > 0.0)) return std::nullopt;
    return Vec(y / s);
}

} // namespace

Vec project_simplex(const Vec& v)
{
    const auto n = v.size();
    std::vector<double> sorted(v.data(), v.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        cum += sorted[i];
        const double cand = (cum - 1.0) / static_cast<double>(i + 1);
        if (sorted[i] - cand > 0.0) theta = cand;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

Vec simplex_least_squares(const Mat& w, const Vec& target, double tol, int max_iter)
{
    const auto m = w.rows();
    const Mat gram = w * w.transpose();
    const Vec lin = w * target;
    const double lip = std::max(Eigen::SelfAdjointEigenSolver<Mat>(gram, Eigen::EigenvaluesOnly)
                                    .eigenvalues()
                                    .maxCoeff(),
                                1e-12);

    // accelerated projected gradient
    Vec y = Vec::Constant(m, 1.0 / static_cast<double>(m));
    Vec yk = y;
    double tk = 1.0;
    for (int it = 0; it < max_iter; ++it) {
        const Vec grad = gram * yk - lin;
        const Vec next = project_simplex(yk - grad / lip);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        yk = next + ((tk - 1.0) / tn) * (next - y);
        const double change = (next - y).lpNorm<Eigen::Infinity>();
        y = next;
        tk = tn;
        if (change < tol) break;
    }

    // active-set polish on the detected support
    Vec best = y;
    double best_res = simplex_residual(w, target, y);
    for (double thresh : {1e-12, 1e-9, 1e-6}) {
        std::vector<int> support;
        for (Eigen::Index i = 0; i < m; ++i)
            if (y(i) > thresh) support.push_back(static_cast<int>(i));
        if (auto cand = polish(w, target, support)) {
            const double res = simplex_residual(w, target, *cand);
            if (res < best_res) {
                best = *cand;
                best_res = res;
            }
        }
    }
    return best;
}

RealizabilityRecord check_realizability(const RelaxedProblem& prob, const OptimalSolution& opt,
                                        double tol, double tau_mix)
{
    const Mat& f = prob.features().f();
    const auto x_n = f.rows();
    const auto n = f.cols();

    Mat a(x_n, n + 1);
    a.leftCols(n) = f;
    a.col(n).setConstant(-1.0);
    const Vec sol = a.completeOrthogonalDecomposition().solve(opt.v_star);

    RealizabilityRecord rec;
    rec.u_star = sol.head(n);
    rec.shift = sol(n);
    rec.v_residual = (a * sol - opt.v_star).norm();
    rec.y_star = simplex_least_squares(prob.features().w(), opt.mu_star);
    rec.y_residual = simplex_residual(prob.features().w(), opt.mu_star, rec.y_star);
    rec.u_bound_U = rec.u_star.lpNorm<Eigen::Infinity>() / tau_mix;
    rec.holds = rec.v_residual <= tol && rec.y_residual <= tol;
    return rec;
}

CoherenceRecord check_coherence(const RelaxedProblem& prob, double u_cap, double tol)
{
    const Mat& f = prob.features().f();
    const Mat flows = (prob.features().w() * prob.q()).transpose(); // column m = Q^T W^T e_m
    const auto cod = f.completeOrthogonalDecomposition();

    CoherenceRecord rec;
    double worst = -1.0;
    for (Eigen::Index m = 0; m < flows.cols(); ++m) {
        const Vec g = flows.col(m);
        const double norm = g.norm();
        double res = 0.0;
        if (norm > 0.0) {
            const Vec coeff = cod.solve(g);
            res = (f * coeff - g).norm() / norm;
            rec.max_coefficient_linf = std::max(rec.max_coefficient_linf, coeff.lpNorm<Eigen::Infinity>());
        }
        rec.vertex_residuals.push_back(res);
        if (res > worst + 1e-12) {
            worst = res;
            rec.witness_index = static_cast<int>(m);
        }
    }
    rec.max_vertex_residual = std::max(worst, 0.0);
    rec.holds = rec.max_vertex_residual <= tol;
    rec.within_u_cap = rec.max_coefficient_linf <= u_cap;
    return rec;
}

double slem(const Mat& p)
{
    if (p.rows() < 2) return 0.0;
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Mat>(p, false).eigenvalues();
    std::vector<double> mods(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) mods[i] = std::abs(ev(i));
    std::sort(mods.begin(), mods.end(), std::greater<>());
    return mods[1];
}

ErgodicityRecord estimate_mixing(const Mdp& mdp, int num_policy_samples, unsigned long long seed,
                                 MixingMode mode)
{
    if (num_policy_samples < 1) throw InvalidModel("estimate_mixing: need at least one sample");
    const int x_n = mdp.num_states();
    const int a_n = mdp.num_actions();

    long long total = 1;
    bool enumerate = true;
    for (int x = 0; x < x_n && enumerate; ++x) {
        total *= a_n;
        if (total > kEnumerationLimit) enumerate = false;
    }

    ErgodicityRecord rec;
    rec.enumerated = enumerate;
    const long long count = enumerate ? total : num_policy_samples;
    Rng rng(seed);
    std::vector<int> actions(x_n, 0);
    double worst = -1.0;

    for (long long k = 0; k < count; ++k) {
        if (enumerate) {
            long long code = k;
            for (int x = 0; x < x_n; ++x) {
                actions[x] = static_cast<int>(code % a_n);
                code /= a_n;
            }
        } else {
            for (int x = 0; x < x_n; ++x) actions[x] = rng.index(a_n);
        }
        const double lam =
            slem(policy_transition_matrix(mdp, deterministic_policy(actions, a_n)));
        rec.slems.push_back(lam);
        if (lam >= 1.0 - kErgodicGap) {
            if (mode == MixingMode::Strict) {
                std::string desc;
                for (int a : actions) desc += std::to_string(a) + " ";
                throw NotErgodic("policy [ " + desc + "] has SLEM " + std::to_string(lam), actions);
            }
            ++rec.non_ergodic_count;
            continue;
        }
        worst = std::max(worst, lam);
    }
    rec.policies_sampled = static_cast<int>(count);
    rec.all_ergodic = rec.non_ergodic_count == 0;
    if (worst < 0.0) throw NotErgodic("no ergodic deterministic policy found", actions);

    rec.slem_max = worst;
    rec.tau = worst > 0.0 ? -1.0 / std::log(worst) : 0.0;
    rec.tau_mix_estimate = 2.0 * (rec.tau + 1.0);
    return rec;
}

double theorem_bound_rhs(double tau_mix, double u_bound, int n, double m, double eta, long long t)
{
    return (11.0 * tau_mix * tau_mix * u_bound * u_bound * n + 7.0 * std::log(m)) /
           (eta * static_cast<double>(t));
}

double flow_bound_rhs(double tau_mix, double u_bound, int n, double m, double eta, long long t)
{
    return (5.0 * tau_mix * tau_mix * u_bound * u_bound * n + 3.0 * std::log(m)) /
           (eta * static_cast<double>(t));
}

RewardGapTerms reward_gap_terms(const Mdp& mdp, const Mat& q, const Vec& mu)
{
    const Policy pi = extract_policy(mu, mdp.num_states(), mdp.num_actions());
    return RewardGapTerms{mu.dot(mdp.rewards()) - average_reward(mdp, pi), flow_residual(q, mu)};
}

} // namespace mprox
