#include "mprox/saddle.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "mprox/errors.hpp"

namespace mprox {

FeatureMaps::FeatureMaps(Mat f, Mat w) : f_(std::move(f)), w_(std::move(w))
{
    if (f_.rows() == 0 || f_.cols() == 0) throw InvalidModel("F must be non-empty");
    if (w_.rows() == 0 || w_.cols() == 0) throw InvalidModel("W must be non-empty");
    if (!f_.allFinite() || !w_.allFinite()) throw InvalidModel("feature maps contain non-finite values");

    const double fmax = f_.cwiseAbs().maxCoeff();
    if (fmax > 1.0) {
        std::ostringstream os;
        os << "F has an entry of magnitude " << fmax << " > 1";
        throw InvalidModel(os.str());
    }
    for (Eigen::Index i = 0; i < w_.rows(); ++i) {
        const double neg = -std::min(0.0, w_.row(i).minCoeff());
        const double dev = std::abs(w_.row(i).sum() - 1.0);
        if (neg > 0.0 || dev > 1e-12) {
            std::ostringstream os;
            os << "W row " << i << " is not a distribution (negative part " << neg
               << ", sum deviation " << dev << ")";
            throw InvalidModel(os.str());
        }
    }
}

FeatureMaps FeatureMaps::identity(const Mdp& mdp)
{
    return FeatureMaps(Mat::Identity(mdp.num_states(), mdp.num_states()),
                       Mat::Identity(mdp.num_pairs(), mdp.num_pairs()));
}

RelaxedProblem::RelaxedProblem(Mdp mdp, FeatureMaps features)
    : mdp_(std::move(mdp)), features_(std::move(features))
{
    if (features_.f().rows() != mdp_.num_states())
        throw InvalidModel("F must have one row per state");
    if (features_.w().cols() != mdp_.num_pairs())
        throw InvalidModel("W must have one column per state-action pair");

    const auto start = std::chrono::steady_clock::now();
    q_ = build_q_matrix(mdp_);
    wqf_ = features_.w() * (q_ * features_.f());
    wr_ = features_.w() * mdp_.rewards();
    k_ = smoothness_constant(features_);
    setup_seconds_ =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double lagrangian(const Mdp& mdp, const Mat& q, const Vec& v, const Vec& mu)
{
    return mu.dot(q * v) + mu.dot(mdp.rewards());
}

double relaxed_lagrangian(const RelaxedProblem& prob, const Iterate& z)
{
    return z.y.dot(prob.wqf() * z.u) + z.y.dot(prob.wr());
}

Gradient operator_g(const RelaxedProblem& prob, const Iterate& z)
{
    Gradient g;
    g.gu = prob.wqf().transpose() * z.y;
    g.gy = -prob.wr() - prob.wqf() * z.u;
    return g;
}

double bregman_divergence(const Iterate& z, const Iterate& z0)
{
    double kl = 0.0;
    for (Eigen::Index j = 0; j < z.y.size(); ++j) {
        const double y = z.y(j);
        if (y == 0.0) continue;
        if (z0.y(j) == 0.0)
            throw ZeroMassReference("reference has zero mass at coordinate " + std::to_string(j));
        kl += y * std::log(y / z0.y(j));
    }
    // the sum-to-one terms cancel only on the simplex; keep the general form
    kl += z0.y.sum() - z.y.sum();
    return 0.5 * (z.u - z0.u).squaredNorm() + kl;
}

double regularizer(const Iterate& z)
{
    double ent = 0.0;
    for (Eigen::Index j = 0; j < z.y.size(); ++j)
        if (z.y(j) > 0.0) ent += z.y(j) * std::log(z.y(j));
    return 0.5 * z.u.squaredNorm() + ent;
}

double primal_norm(const Vec& du, const Vec& dy)
{
    const double l1 = dy.lpNorm<1>();
    return std::sqrt(du.squaredNorm() + l1 * l1);
}

double primal_norm(const Iterate& delta) { return primal_norm(delta.u, delta.y); }

double dual_norm(const Vec& gu, const Vec& gy)
{
    const double linf = gy.size() ? gy.lpNorm<Eigen::Infinity>() : 0.0;
    return std::sqrt(gu.squaredNorm() + linf * linf);
}

double dual_norm(const Gradient& g) { return dual_norm(g.gu, g.gy); }

double smoothness_constant(const FeatureMaps& features)
{
    return features.f().cwiseAbs().rowwise().sum().maxCoeff();
}

double relaxed_duality_gap(const RelaxedProblem& prob, const Iterate& z_bar, const Iterate& z_ref)
{
    return relaxed_lagrangian(prob, Iterate{z_bar.u, z_ref.y}) -
           relaxed_lagrangian(prob, Iterate{z_ref.u, z_bar.y});
}

double exact_duality_gap(const Mdp& mdp, const Mat& q, const Vec& v_bar, const Vec& mu_bar,
                         const Vec& v_ref, const Vec& mu_ref)
{
    return lagrangian(mdp, q, v_bar, mu_ref) - lagrangian(mdp, q, v_ref, mu_bar);
}

void validate_iterate(const Iterate& z, int n, int m)
{
    if (z.u.size() != n || z.y.size() != m) throw InvalidModel("iterate has wrong dimensions");
    if (!z.u.allFinite() || !z.y.allFinite()) throw InvalidModel("iterate has non-finite entries");
    if ((z.y.array() < 0.0).any()) throw InvalidModel("iterate y has negative entries");
    if (std::abs(z.y.sum() - 1.0) > 1e-12) throw InvalidModel("iterate y does not sum to 1");
}

} // namespace mprox
