#include "mprox/mdp.hpp"

#include <cmath>
#include <sstream>

#include "mprox/errors.hpp"

namespace mprox {

namespace {

constexpr double kProbTol = 1e-12;
constexpr double kRankTol = 1e-8;
constexpr double kCondLimit = 1e12;
constexpr double kResidualTol = 1e-10;

std::string pair_str(int x, int a)
{
    std::ostringstream os;
    os << "(x=" << x << ", a=" << a << ")";
    return os.str();
}

Vec power_iteration(const Mat& p_pi)
{
    const auto n = p_pi.rows();
    // lazy chain has the same stationary law and is aperiodic
    Mat lazy = 0.5 * (p_pi + Mat::Identity(n, n));
    Vec d = Vec::Constant(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < 1000000; ++it) {
        Vec next = lazy.transpose() * d;
        next /= next.sum();
        if ((next - d).lpNorm<1>() < 1e-15) return next;
        d = next;
    }
    return d;
}

} // namespace

Mdp::Mdp(int num_states, int num_actions, Mat transitions, Vec rewards, bool reward_range_relaxed)
    : num_states_(num_states), num_actions_(num_actions), p_(std::move(transitions)),
      r_(std::move(rewards)), relaxed_(reward_range_relaxed)
{
    if (num_states <= 0 || num_actions <= 0)
        throw InvalidModel("num_states and num_actions must be positive");
    if (p_.rows() != num_pairs() || p_.cols() != num_states)
        throw InvalidModel("transition matrix has wrong shape");
    if (r_.size() != num_pairs()) throw InvalidModel("reward vector has wrong length");

    for (int x = 0; x < num_states; ++x) {
        for (int a = 0; a < num_actions; ++a) {
            const int i = pair(x, a);
            double sum = 0.0;
            for (int xn = 0; xn < num_states; ++xn) {
                const double v = p_(i, xn);
                if (!std::isfinite(v) || v < 0.0)
                    throw InvalidModel("negative or non-finite probability at " + pair_str(x, a) +
                                       " -> " + std::to_string(xn));
                sum += v;
            }
            if (std::abs(sum - 1.0) > kProbTol)
                throw InvalidModel("transition row " + pair_str(x, a) + " sums to " +
                                   std::to_string(sum));
            const double rv = r_(i);
            if (!std::isfinite(rv)) throw InvalidModel("non-finite reward at " + pair_str(x, a));
            if (!relaxed_ && (rv < 0.0 || rv > 1.0))
                throw InvalidModel("reward outside [0,1] at " + pair_str(x, a));
        }
    }
}

Mdp Mdp::scaled(double factor) const
{
    Vec r = r_ * factor;
    const bool in_range = r.minCoeff() >= 0.0 && r.maxCoeff() <= 1.0;
    return Mdp(num_states_, num_actions_, p_, r, relaxed_ && !in_range);
}

Policy deterministic_policy(const std::vector<int>& actions, int num_actions)
{
    Policy pi = Policy::Zero(static_cast<Eigen::Index>(actions.size()), num_actions);
    for (std::size_t x = 0; x < actions.size(); ++x) pi(static_cast<Eigen::Index>(x), actions[x]) = 1.0;
    return pi;
}

void validate_policy(const Policy& pi, int num_states, int num_actions)
{
    if (pi.rows() != num_states || pi.cols() != num_actions)
        throw InvalidModel("policy has wrong shape");
    for (int x = 0; x < num_states; ++x) {
        if ((pi.row(x).array() < 0.0).any() || !pi.row(x).allFinite())
            throw InvalidModel("policy row " + std::to_string(x) + " has negative entries");
        if (std::abs(pi.row(x).sum() - 1.0) > kProbTol)
            throw InvalidModel("policy row " + std::to_string(x) + " does not sum to 1");
    }
}

Mat build_q_matrix(const Mdp& mdp)
{
    Mat q = mdp.transitions();
    for (int x = 0; x < mdp.num_states(); ++x)
        for (int a = 0; a < mdp.num_actions(); ++a) q(mdp.pair(x, a), x) -= 1.0;
    return q;
}

Mat policy_transition_matrix(const Mdp& mdp, const Policy& pi)
{
    validate_policy(pi, mdp.num_states(), mdp.num_actions());
    Mat out = Mat::Zero(mdp.num_states(), mdp.num_states());
    for (int x = 0; x < mdp.num_states(); ++x)
        for (int a = 0; a < mdp.num_actions(); ++a)
            if (pi(x, a) != 0.0) out.row(x) += pi(x, a) * mdp.transitions().row(mdp.pair(x, a));
    return out;
}

Vec stationary_distribution(const Mat& p_pi)
{
    const auto n = p_pi.rows();
    if (p_pi.cols() != n) throw InvalidModel("transition matrix must be square");

    Mat sys(n + 1, n);
    sys.topRows(n) = p_pi.transpose() - Mat::Identity(n, n);
    sys.row(n).setOnes();
    Vec rhs = Vec::Zero(n + 1);
    rhs(n) = 1.0;

    Eigen::ColPivHouseholderQR<Mat> qr(sys);
    qr.setThreshold(kRankTol);
    if (qr.rank() < n)
        throw NonUniqueStationary("stationary distribution is not unique (rank " +
                                  std::to_string(qr.rank()) + " < " + std::to_string(n) + ")");

    const auto& r = qr.matrixR();
    const double rmax = std::abs(r(0, 0));
    const double rmin = std::abs(r(n - 1, n - 1));
    Vec d = (rmin * kCondLimit < rmax) ? power_iteration(p_pi) : Vec(qr.solve(rhs));

    d = d.cwiseMax(0.0);
    d /= d.sum();
    if ((p_pi.transpose() * d - d).lpNorm<1>() > kResidualTol) {
        Vec refined = power_iteration(p_pi);
        if ((p_pi.transpose() * refined - refined).lpNorm<1>() < (p_pi.transpose() * d - d).lpNorm<1>())
            d = refined;
    }
    return d;
}

Vec occupancy_from_policy(const Mdp& mdp, const Policy& pi)
{
    const Vec d = stationary_distribution(policy_transition_matrix(mdp, pi));
    Vec mu(mdp.num_pairs());
    for (int x = 0; x < mdp.num_states(); ++x)
        for (int a = 0; a < mdp.num_actions(); ++a) mu(mdp.pair(x, a)) = d(x) * pi(x, a);
    return mu;
}

Vec policy_rewards(const Mdp& mdp, const Policy& pi)
{
    Vec out(mdp.num_states());
    for (int x = 0; x < mdp.num_states(); ++x) {
        double s = 0.0;
        for (int a = 0; a < mdp.num_actions(); ++a) s += pi(x, a) * mdp.reward(x, a);
        out(x) = s;
    }
    return out;
}

double average_reward(const Mdp& mdp, const Policy& pi)
{
    const Vec d = stationary_distribution(policy_transition_matrix(mdp, pi));
    return d.dot(policy_rewards(mdp, pi));
}

Policy extract_policy(const Vec& mu, int num_states, int num_actions)
{
    if (mu.size() != static_cast<Eigen::Index>(num_states) * num_actions)
        throw InvalidModel("occupancy vector has wrong length");
    if ((mu.array() < 0.0).any()) throw InvalidModel("occupancy vector has negative entries");
    if (!(mu.array() > 0.0).any()) throw AllZeroInput("cannot extract a policy from an all-zero vector");

    Policy pi(num_states, num_actions);
    for (int x = 0; x < num_states; ++x) {
        const auto row = mu.segment(static_cast<Eigen::Index>(x) * num_actions, num_actions);
        const double mass = row.sum();
        if (mass > 0.0)
            pi.row(x) = row.transpose() / mass;
        else
            pi.row(x).setConstant(1.0 / num_actions);
    }
    return pi;
}

double flow_residual(const Mat& q, const Vec& mu)
{
    if (q.rows() != mu.size()) throw InvalidModel("flow residual: dimension mismatch");
    return (q.transpose() * mu).lpNorm<1>();
}

} // namespace mprox
