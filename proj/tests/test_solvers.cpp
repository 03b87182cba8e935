#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "mprox/assumptions.hpp"
#include "mprox/envs.hpp"
#include "mprox/errors.hpp"
#include "mprox/solvers.hpp"

using namespace mprox;

namespace {

// Two self-loop states, one action: W Q F = 0 and W r = (1, 0).
RelaxedProblem toy()
{
    Vec r(2);
    r << 1.0, 0.0;
    const Mdp m(2, 1, Mat::Identity(2, 2), r);
    return RelaxedProblem(m, FeatureMaps(Mat::Constant(2, 1, 0.5), Mat::Identity(2, 2)));
}

RelaxedProblem tabular_counterexample()
{
    const auto cx = build_counterexample();
    return RelaxedProblem(cx.mdp, FeatureMaps::identity(cx.mdp));
}

// Plain-loop Mirror Prox on dense arrays, multiplicative form.
struct ScalarMp {
    std::vector<std::vector<double>> a; // M x N
    std::vector<double> b;              // M
    std::vector<double> u, y;

    void step(double eta)
    {
        const std::size_t m = b.size(), n = u.size();
        auto grad_u = [&](const std::vector<double>& yy) {
            std::vector<double> g(n, 0.0);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) g[j] += a[i][j] * yy[i];
            return g;
        };
        auto mult = [&](const std::vector<double>& uu) {
            std::vector<double> e(m), out(m);
            double top = -1e300, s = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                double au = 0.0;
                for (std::size_t j = 0; j < n; ++j) au += a[i][j] * uu[j];
                e[i] = eta * (b[i] + au);
                top = std::max(top, e[i]);
            }
            for (std::size_t i = 0; i < m; ++i) s += out[i] = y[i] * std::exp(e[i] - top);
            for (auto& v : out) v /= s;
            return out;
        };
        const auto gu = grad_u(y);
        std::vector<double> uh(n);
        for (std::size_t j = 0; j < n; ++j) uh[j] = u[j] - eta * gu[j];
        const auto yh = mult(u);
        const auto gh = grad_u(yh);
        const auto yn = mult(uh);
        for (std::size_t j = 0; j < n; ++j) u[j] -= eta * gh[j];
        y = yn;
    }
};

} // namespace

TEST_CASE("zero step size leaves the iterate unchanged")
{
    const RelaxedProblem prob = tabular_counterexample();
    Iterate z = initial_iterate(prob);
    z.u << 0.3, -0.2, 1.0;
    const auto [hat, next] = mirror_prox_step(prob, z, 0.0);
    CHECK((hat.u - z.u).norm() == 0.0);
    CHECK((next.y - z.y).norm() <= 1e-16);
    CHECK((mirror_descent_step(prob, z, 0.0).y - z.y).norm() <= 1e-16);
}

TEST_CASE("hand-evaluated exponentiated-gradient step")
{
    const RelaxedProblem prob = toy();
    const Iterate z0 = initial_iterate(prob);
    const auto [hat, next] = mirror_prox_step(prob, z0, 1.0);
    const double e = std::exp(1.0);
    CHECK(std::abs(next.y(0) - e / (e + 1.0)) <= 1e-15);
    CHECK(std::abs(next.y(1) - 1.0 / (e + 1.0)) <= 1e-15);
    CHECK(next.u(0) == 0.0);

    const Iterate md = mirror_descent_step(prob, z0, 1.0);
    CHECK((md.y - hat.y).norm() == 0.0);
    CHECK((md.u - hat.u).norm() == 0.0);
}

TEST_CASE("steps agree with an independent scalar implementation")
{
    const RelaxedProblem prob = tabular_counterexample();
    ScalarMp ref;
    for (int i = 0; i < prob.m(); ++i) {
        ref.a.emplace_back(prob.n());
        for (int j = 0; j < prob.n(); ++j) ref.a.back()[j] = prob.wqf()(i, j);
        ref.b.push_back(prob.wr()(i));
    }
    ref.u.assign(prob.n(), 0.0);
    ref.y.assign(prob.m(), 1.0 / prob.m());

    Iterate z = initial_iterate(prob);
    for (int t = 0; t < 30; ++t) {
        z = mirror_prox_step(prob, z, 0.25).second;
        ref.step(0.25);
        for (int i = 0; i < prob.m(); ++i) CHECK(std::abs(z.y(i) - ref.y[i]) <= 1e-13);
        for (int j = 0; j < prob.n(); ++j) CHECK(std::abs(z.u(j) - ref.u[j]) <= 1e-13);
    }
}

TEST_CASE("default step size")
{
    CHECK(default_step_size(tabular_counterexample()) == 0.25);
    const Mdp m(2, 1, Mat::Identity(2, 2), Vec::Zero(2));
    Mat prob_rows(2, 3);
    prob_rows << 0.2, 0.3, 0.5, 1, 0, 0;
    CHECK(default_step_size(RelaxedProblem(m, FeatureMaps(prob_rows, Mat::Identity(2, 2)))) ==
          doctest::Approx(0.25));
    CHECK(default_step_size(RelaxedProblem(m, FeatureMaps(Mat::Ones(2, 5), Mat::Identity(2, 2)))) ==
          doctest::Approx(1.0 / 20.0));
}

TEST_CASE("single iteration averages")
{
    const RelaxedProblem prob = tabular_counterexample();
    SolverConfig cfg;
    cfg.num_iters = 1;
    cfg.checkpoint_every = 1;
    Iterate hat;
    RunOptions opts;
    opts.observer = [&](int, const Iterate&, const Iterate& h, const Iterate&) { hat = h; };
    const SolveTrace tr = run(prob, cfg, opts);
    REQUIRE(tr.checkpoints.size() == 1);
    CHECK((tr.checkpoints[0].y_bar - initial_iterate(prob).y).norm() == 0.0);
    CHECK((tr.checkpoints[0].u_bar - hat.u).norm() == 0.0);
}

TEST_CASE("tabular run converges and respects the trajectory inequalities")
{
    const auto cx = build_counterexample();
    const RelaxedProblem prob(cx.mdp, FeatureMaps::identity(cx.mdp));
    const Iterate star{cx.opt.v_star, cx.opt.mu_star};
    const Iterate z1 = initial_iterate(prob);
    const double d1 = bregman_divergence(star, z1);
    const double eta = 0.25;

    int simplex_bad = 0, descent_bad = 0, bounded_bad = 0;
    RunOptions opts;
    opts.reference = cx.opt;
    const auto erg = estimate_mixing(cx.mdp, 1, 0);
    opts.bounds = BoundParams{erg.tau_mix_estimate, 1.0, 1.0};
    opts.observer = [&](int, const Iterate& zt, const Iterate& zh, const Iterate& zn) {
        if (std::abs(zn.y.sum() - 1.0) > 1e-12 || (zn.y.array() <= 0.0).any()) ++simplex_bad;
        const Gradient g = operator_g(prob, zh);
        const double lhs = eta * ((zh.u - star.u).dot(g.gu) + (zh.y - star.y).dot(g.gy));
        if (lhs > bregman_divergence(star, zt) - bregman_divergence(star, zn) + 1e-9) ++descent_bad;
        if (bregman_divergence(star, zn) > d1 + 1e-9) ++bounded_bad;
    };
    SolverConfig cfg;
    cfg.eta = eta;
    cfg.num_iters = 5000;
    cfg.checkpoint_every = 100;
    const SolveTrace tr = run(prob, cfg, opts);

    CHECK(simplex_bad == 0);
    CHECK(descent_bad == 0);
    CHECK(bounded_bad == 0);
    CHECK(tr.bounds_checked);
    CHECK(tr.bound_violations == 0);
    CHECK(tr.checkpoints.back().suboptimality <= 1e-3);

    int prev = 0;
    for (const auto& cp : tr.checkpoints) {
        CHECK(cp.t > prev);
        prev = cp.t;
        CHECK(cp.gap_vs_ref <= d1 / (eta * cp.t) + 1e-9);
        CHECK(std::abs(cp.y_bar.sum() - 1.0) <= 1e-12);
        const double lhs = erg.tau_mix_estimate * cp.flow_residual_l1;
        CHECK(lhs <= flow_bound_rhs(erg.tau_mix_estimate, 1.0, prob.n(), prob.m(), eta, cp.t) + 1e-9);
        CHECK(std::abs(cp.suboptimality - (cx.opt.rho_star - cp.rho_t)) == 0.0);
    }
}

TEST_CASE("bound RHS is monotone and dominates suboptimality")
{
    const RelaxedProblem prob = tabular_counterexample();
    const auto cx = build_counterexample();
    const double tau = estimate_mixing(cx.mdp, 1, 0).tau_mix_estimate;
    SolverConfig cfg;
    cfg.num_iters = 3000;
    cfg.checkpoint_every = 100;
    RunOptions opts;
    opts.reference = cx.opt;
    opts.bounds = BoundParams{tau, 1.0, 1.0};
    const SolveTrace tr = run(prob, cfg, opts);
    double prev = 1e300;
    for (const auto& cp : tr.checkpoints) {
        CHECK(cp.bound_rhs < prev);
        prev = cp.bound_rhs;
        CHECK(cp.suboptimality <= cp.bound_rhs);
    }
}

TEST_CASE("runs are deterministic")
{
    const RelaxedProblem prob = tabular_counterexample();
    SolverConfig cfg;
    cfg.num_iters = 500;
    cfg.checkpoint_every = 50;
    RunOptions opts;
    opts.reference = build_counterexample().opt;
    for (Variant v : {Variant::MirrorProx, Variant::MirrorDescent}) {
        cfg.variant = v;
        const SolveTrace a = run(prob, cfg, opts);
        const SolveTrace b = run(prob, cfg, opts);
        REQUIRE(a.checkpoints.size() == b.checkpoints.size());
        for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
            CHECK(a.checkpoints[i].u_bar == b.checkpoints[i].u_bar);
            CHECK(a.checkpoints[i].y_bar == b.checkpoints[i].y_bar);
            CHECK(std::memcmp(&a.checkpoints[i].rho_t, &b.checkpoints[i].rho_t, sizeof(double)) == 0);
        }
    }
}

TEST_CASE("large step sizes skip bound checks; absurd ones overflow")
{
    const RelaxedProblem prob = tabular_counterexample();
    SolverConfig cfg;
    cfg.eta = 2.0;
    cfg.num_iters = 10;
    cfg.checkpoint_every = 10;
    RunOptions opts;
    opts.bounds = BoundParams{};
    const SolveTrace tr = run(prob, cfg, opts);
    CHECK_FALSE(tr.bounds_checked);
    CHECK_FALSE(tr.warnings.empty());

    cfg.eta = 1e308;
    CHECK_THROWS_AS(run(prob, cfg), NumericOverflow);
}

TEST_CASE("solver config validation")
{
    SolverConfig cfg;
    cfg.eta = 0.0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    cfg.eta = 0.1;
    cfg.num_iters = 10;
    cfg.checkpoint_every = 20;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}
