#include "mprox/envs.hpp"

#include <cmath>
#include <vector>

#include "mprox/assumptions.hpp"
#include "mprox/errors.hpp"
#include "mprox/random.hpp"

namespace mprox {

namespace {

constexpr double kRealizeTol = 1e-8;

} // namespace

Counterexample build_counterexample()
{
    constexpr int kL = 0;
    constexpr int kR = 1;
    Mat p = Mat::Zero(6, 3);
    Vec r(6);
    auto at = [](int x, int a) { return 2 * x + a; };
    for (int a = 0; a < 2; ++a) {
        p(at(0, a), 1) = 1.0;
        p(at(2, a), 1) = 1.0;
    }
    p(at(1, kL), 1) = 0.5;
    p(at(1, kL), 0) = 0.5;
    p(at(1, kR), 1) = 0.5;
    p(at(1, kR), 2) = 0.5;
    r << 1, 1, 0, 0, 3, 3;
    Mdp mdp(3, 2, p, r, true);

    const std::array<int, 4> eff{at(0, kR), at(1, kL), at(1, kR), at(2, kL)};
    Mat f(3, 1);
    f << -1, -1, 1;
    Mat w = Mat::Zero(4, 6);
    for (int m = 0; m < 4; ++m) w(m, eff[m]) = 1.0;

    OptimalSolution opt = solve_exact(mdp);
    return Counterexample{std::move(mdp), FeatureMaps(f, w), std::move(opt), eff};
}

Vec counterexample_y_eps(double eps)
{
    Vec y(4);
    y << 1.0 - eps, eps, 0.0, 0.0;
    return y;
}

Mdp build_gridworld(const GridworldSpec& spec)
{
    const int s = spec.side;
    if (s < 2) throw InvalidModel("gridworld side must be at least 2");
    if (spec.reward_state < 0 || spec.reward_state >= s * s)
        throw InvalidModel("gridworld reward state out of range");
    if (!(spec.success_prob > 0.0 && spec.success_prob <= 1.0))
        throw InvalidModel("gridworld success probability must lie in (0,1]");

    const int n = s * s;
    const int drow[4] = {-1, 1, 0, 0};
    const int dcol[4] = {0, 0, -1, 1};
    auto cell = [s](int row, int col) { return ((row + s) % s) * s + (col + s) % s; };

    Mat p = Mat::Zero(4 * n, n);
    Vec r = Vec::Zero(4 * n);
    for (int x = 0; x < n; ++x) {
        const int row = x / s;
        const int col = x % s;
        for (int a = 0; a < 4; ++a) {
            const int i = 4 * x + a;
            if (x == spec.reward_state) {
                for (int xn = 0; xn < n; ++xn)
                    if (xn != x) p(i, xn) = 1.0 / (n - 1);
                r(i) = 1.0;
                continue;
            }
            p(i, cell(row + drow[a], col + dcol[a])) += spec.success_prob;
            p(i, cell(row - drow[a], col - dcol[a])) += 1.0 - spec.success_prob;
        }
    }
    return Mdp(n, 4, p, r);
}

Mdp build_chain(const ChainSpec& spec)
{
    const int len = spec.length;
    if (len < 3) throw InvalidModel("chain length must be at least 3");
    if (!(spec.success_prob > 0.0 && spec.success_prob <= 1.0))
        throw InvalidModel("chain success probability must lie in (0,1]");

    const double p = spec.success_prob;
    Mat tr = Mat::Zero(2 * len, len);
    Vec r = Vec::Zero(2 * len);
    for (int x = 0; x < len; ++x) {
        for (int a = 0; a < 2; ++a) {
            const int i = 2 * x + a;
            int target;
            if (x == 0)
                target = len - 1;
            else if (x == len - 1)
                target = x - 1;
            else
                target = a == 0 ? x - 1 : x + 1;
            tr(i, target) += p;
            tr(i, x) += 1.0 - p;
        }
    }
    const double reward = spec.normalized_rewards ? 1.0 : static_cast<double>(len);
    r(0) = reward;
    r(1) = reward;
    return Mdp(len, 2, tr, r, !spec.normalized_rewards);
}

double chain_reward_scale(const ChainSpec& spec)
{
    return spec.normalized_rewards ? static_cast<double>(spec.length) : 1.0;
}

FeatureMaps build_chain_features(const Mdp& mdp, const ChainSpec& spec, const OptimalSolution& opt)
{
    const int len = mdp.num_states();
    const int a_n = mdp.num_actions();
    if (len != spec.length || a_n != 2) throw InvalidModel("chain features: MDP does not match spec");
    if (spec.num_clusters < 1 || spec.num_clusters > len)
        throw InvalidModel("chain features: num_clusters must lie in [1, L]");
    if (spec.num_random_w_rows < 0 || spec.num_random_f_cols < 0)
        throw InvalidModel("chain features: random row/column counts must be non-negative");

    Rng rng(spec.seed);

    // x1 and x_L have a single real action, stored as action 0 and duplicated as 1
    Mat real_pair = Mat::Ones(len, a_n);
    real_pair(0, 1) = 0.0;
    real_pair(len - 1, 1) = 0.0;

    std::vector<int> cluster(len);
    for (;;) {
        std::vector<int> sizes(spec.num_clusters, 0);
        for (int x = 0; x < len; ++x) {
            cluster[x] = rng.index(spec.num_clusters);
            ++sizes[cluster[x]];
        }
        bool ok = true;
        for (int c : sizes) ok = ok && c > 0;
        if (ok) break;
    }

    std::vector<Vec> rows;
    for (int a = 0; a < a_n; ++a) {
        for (int k = 0; k < spec.num_clusters; ++k) {
            Vec row = Vec::Zero(mdp.num_pairs());
            for (int x = 0; x < len; ++x)
                if (cluster[x] == k) row(mdp.pair(x, a)) = real_pair(x, a);
            if (row.sum() > 0.0) rows.push_back(row / row.sum());
        }
    }
    for (int j = 0; j < spec.num_random_w_rows; ++j) {
        Vec row(mdp.num_pairs());
        for (int x = 0; x < len; ++x)
            for (int a = 0; a < a_n; ++a) row(mdp.pair(x, a)) = rng.uniform() * real_pair(x, a);
        rows.push_back(row / row.sum());
    }

    auto stack = [&](const std::vector<Vec>& rs) {
        Mat w(static_cast<Eigen::Index>(rs.size()), mdp.num_pairs());
        for (std::size_t i = 0; i < rs.size(); ++i) w.row(static_cast<Eigen::Index>(i)) = rs[i].transpose();
        return w;
    };
    Mat w = stack(rows);
    {
        const Vec y = simplex_least_squares(w, opt.mu_star);
        if ((w.transpose() * y - opt.mu_star).norm() > kRealizeTol) {
            rows.push_back(opt.mu_star / opt.mu_star.sum());
            w = stack(rows);
        }
    }

    const Mat q = build_q_matrix(mdp);
    const Mat flows = (w * q).transpose();
    Eigen::ColPivHouseholderQR<Mat> qr(flows);
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    const Mat basis = qr.householderQ() * Mat::Identity(len, rank);

    const double vscale = opt.v_star.lpNorm<Eigen::Infinity>();
    Mat f(len, 1 + rank + spec.num_random_f_cols);
    f.col(0) = vscale > 0.0 ? Vec(opt.v_star / vscale) : Vec::Zero(len);
    for (Eigen::Index j = 0; j < rank; ++j) f.col(1 + j) = basis.col(j) / basis.col(j).lpNorm<Eigen::Infinity>();
    for (int j = 0; j < spec.num_random_f_cols; ++j)
        for (int x = 0; x < len; ++x) f(x, 1 + rank + j) = rng.uniform();

    FeatureMaps features(f, w);
    const RelaxedProblem prob(mdp, features);
    const auto rec = check_realizability(prob, opt, kRealizeTol);
    if (!rec.holds)
        throw ConstructionFailed("chain features: realizability residuals " + std::to_string(rec.v_residual) +
                                 ", " + std::to_string(rec.y_residual));
    return features;
}

} // namespace mprox
