#include "mprox/exact.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "mprox/errors.hpp"

namespace mprox {

namespace {

constexpr double kImproveTol = 1e-10;

Mat action_values(const Mdp& mdp, const Vec& v)
{
    const Vec qv = mdp.rewards() + mdp.transitions() * v;
    return qv.reshaped<Eigen::RowMajor>(mdp.num_states(), mdp.num_actions());
}

struct Evaluation {
    Vec v;
    double rho;
};

// Solves (I - P_pi) v + rho 1 = r_pi with v(0) = 0; empty when the system is singular.
std::optional<Evaluation> evaluate(const Mdp& mdp, const std::vector<int>& actions)
{
    const int n = mdp.num_states();
    Mat sys = Mat::Zero(n + 1, n + 1);
    Vec rhs = Vec::Zero(n + 1);
    for (int x = 0; x < n; ++x) {
        const int i = mdp.pair(x, actions[x]);
        sys.row(x).head(n) = -mdp.transitions().row(i);
        sys(x, x) += 1.0;
        sys(x, n) = 1.0;
        rhs(x) = mdp.rewards()(i);
    }
    sys(n, 0) = 1.0;

    Eigen::FullPivLU<Mat> lu(sys);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return std::nullopt;
    Vec sol = lu.solve(rhs);
    // one refinement step against round-off
    sol += lu.solve(Vec(rhs - sys * sol));
    return Evaluation{sol.head(n), sol(n)};
}

std::vector<int> improve(const Mdp& mdp, const Vec& v, const std::vector<int>& current)
{
    const Mat qa = action_values(mdp, v);
    std::vector<int> next = current;
    for (int x = 0; x < mdp.num_states(); ++x) {
        const double best = qa.row(x).maxCoeff();
        const double tol = kImproveTol * std::max(1.0, std::abs(best));
        if (qa(x, current[x]) >= best - tol) continue;
        for (int a = 0; a < mdp.num_actions(); ++a) {
            if (qa(x, a) >= best - tol) {
                next[x] = a;
                break;
            }
        }
    }
    return next;
}

} // namespace

double bellman_residual(const Mdp& mdp, const Vec& v, double rho)
{
    const Mat qa = action_values(mdp, v);
    double worst = 0.0;
    for (int x = 0; x < mdp.num_states(); ++x)
        worst = std::max(worst, std::abs(v(x) - (qa.row(x).maxCoeff() - rho)));
    return worst;
}

std::vector<int> greedy_actions(const Mdp& mdp, const Vec& v, double tie_tol)
{
    const Mat qa = action_values(mdp, v);
    std::vector<int> out(mdp.num_states(), 0);
    for (int x = 0; x < mdp.num_states(); ++x) {
        const double best = qa.row(x).maxCoeff();
        for (int a = 0; a < mdp.num_actions(); ++a) {
            if (qa(x, a) >= best - tie_tol) {
                out[x] = a;
                break;
            }
        }
    }
    return out;
}

OptimalSolution solve_exact(const Mdp& mdp, int max_iter)
{
    const int n = mdp.num_states();
    std::vector<int> actions(n, 0);
    for (int x = 0; x < n; ++x) {
        const auto row = mdp.rewards().segment(static_cast<Eigen::Index>(x) * mdp.num_actions(),
                                               mdp.num_actions());
        Eigen::Index best;
        row.maxCoeff(&best);
        actions[x] = static_cast<int>(best);
    }

    auto eval = evaluate(mdp, actions);
    if (!eval) {
        // multichain start: take a greedy policy from damped value iteration instead
        RviOptions opts;
        opts.damping = 0.5;
        RviResult vi;
        try {
            vi = relative_value_iteration(mdp, 1e-6 * std::max(1.0, mdp.max_abs_reward()), 100000, opts);
        } catch (const NoConvergence&) {
            throw NoConvergence("policy iteration: no unichain starting policy found");
        }
        actions = greedy_actions(mdp, vi.v, 1e-12);
        eval = evaluate(mdp, actions);
        if (!eval) throw NoConvergence("policy iteration: starting policy is multichain");
    }

    for (int it = 0; it < max_iter; ++it) {
        std::vector<int> next = improve(mdp, eval->v, actions);
        if (next == actions) {
            OptimalSolution sol;
            sol.actions = actions;
            sol.policy_star = deterministic_policy(actions, mdp.num_actions());
            sol.v_star = eval->v;
            sol.v_star.array() -= sol.v_star(0);
            sol.mu_star = occupancy_from_policy(mdp, sol.policy_star);
            sol.rho_star = sol.mu_star.dot(mdp.rewards());
            const double scale = std::max(1.0, mdp.max_abs_reward());
            if (bellman_residual(mdp, sol.v_star, sol.rho_star) > 1e-9 * scale)
                throw NoConvergence("policy iteration: Bellman residual above tolerance");
            return sol;
        }
        actions = std::move(next);
        eval = evaluate(mdp, actions);
        if (!eval) throw NoConvergence("policy iteration: reached a multichain policy");
    }
    throw NoConvergence("policy iteration: iteration cap reached");
}

RviResult relative_value_iteration(const Mdp& mdp, double tol, int max_iter, const RviOptions& opts)
{
    if (!(tol > 0.0)) throw InvalidModel("relative value iteration: tol must be positive");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw InvalidModel("relative value iteration: damping must lie in (0,1]");

    Vec v = Vec::Zero(mdp.num_states());
    for (int k = 1; k <= max_iter; ++k) {
        const Mat qa = action_values(mdp, v);
        const Vec tv = qa.rowwise().maxCoeff();
        const Vec diff = tv - v;
        const double hi = diff.maxCoeff();
        const double lo = diff.minCoeff();
        const double span = hi - lo;
        const double rho = 0.5 * (hi + lo);
        if (opts.observer) opts.observer(RviProgress{k, span, rho, v});
        if (span <= tol) {
            RviResult res;
            res.v = v.array() - v(0);
            res.rho = rho;
            res.policy = deterministic_policy(greedy_actions(mdp, v), mdp.num_actions());
            res.iterations = k;
            return res;
        }
        Vec next = (1.0 - opts.damping) * v + opts.damping * tv;
        v = next.array() - next(0);
    }
    throw NoConvergence("relative value iteration: no convergence after " + std::to_string(max_iter) +
                        " iterations");
}

} // namespace mprox
