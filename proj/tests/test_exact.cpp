#include <doctest.h>

#include "mprox/envs.hpp"
#include "mprox/errors.hpp"
#include "mprox/exact.hpp"
#include "oracles.hpp"

using namespace mprox;

TEST_CASE("exact solution of the three-state example")
{
    const auto cx = build_counterexample();
    const auto& opt = cx.opt;
    CHECK(std::abs(opt.rho_star - 1.0) <= 1e-14);
    Vec mu(4);
    for (int m = 0; m < 4; ++m) mu(m) = opt.mu_star(cx.effective_pairs[m]);
    CHECK((mu - Vec((Vec(4) << 0, 0, 2.0 / 3.0, 1.0 / 3.0).finished())).cwiseAbs().maxCoeff() <= 1e-14);

    Vec shifted_ref(3);
    shifted_ref << -1, -1, 1;
    const Vec shifted = shifted_ref.array() - shifted_ref(0);
    CHECK((opt.v_star - shifted).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(opt.v_star(0) == 0.0);
    CHECK(opt.actions[1] == 1);
}

TEST_CASE("single state, single action")
{
    const Mdp m(1, 1, Mat::Ones(1, 1), Vec::Constant(1, 0.7));
    const auto opt = solve_exact(m);
    CHECK(opt.rho_star == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(opt.v_star(0) == 0.0);
}

TEST_CASE("policy iteration matches brute-force enumeration")
{
    Rng rng(2024);
    for (int k = 0; k < 40; ++k) {
        const int xs = 1 + k % 5;
        const int as = 1 + k % 3;
        const Mdp m = oracle::random_mdp(rng, xs, as);
        const auto opt = solve_exact(m);
        CHECK(std::abs(opt.rho_star - oracle::brute_force_gain(m)) <= 1e-9);
        CHECK(bellman_residual(m, opt.v_star, opt.rho_star) <= 1e-8);
        CHECK(flow_residual(build_q_matrix(m), opt.mu_star) <= 1e-9);
        CHECK(std::abs(opt.rho_star - opt.mu_star.dot(m.rewards())) <= 1e-15);
        CHECK(opt.v_star(0) == 0.0);
    }
}

TEST_CASE("policy iteration recovers from a multichain start")
{
    // greedy-on-reward start (all "up") splits the torus into separate cycles
    const Mdp grid = build_gridworld({4, 0, 0.9});
    const auto opt = solve_exact(grid);
    CHECK(opt.rho_star > 0.0);
    CHECK(bellman_residual(grid, opt.v_star, opt.rho_star) <= 1e-9);
    const auto vi = relative_value_iteration(grid, 1e-10, 100000, {0.5, {}});
    CHECK(std::abs(vi.rho - opt.rho_star) <= 1e-9);
}

TEST_CASE("relative value iteration")
{
    const auto cx = build_counterexample();
    const auto res = relative_value_iteration(cx.mdp, 1e-10, 10000);
    CHECK(res.policy(1, 1) == 1.0);
    CHECK(std::abs(res.rho - 1.0) <= 1e-9);

    const Mdp single(1, 2, Mat::Ones(2, 1), Vec::Constant(2, 0.3));
    CHECK(relative_value_iteration(single, 1e-12, 10).iterations == 1);

    CHECK_THROWS_AS(relative_value_iteration(cx.mdp, 1e-12, 2), NoConvergence);
    CHECK_THROWS_AS(relative_value_iteration(cx.mdp, 0.0, 2), InvalidModel);
}

TEST_CASE("value iteration needs more sweeps on longer chains")
{
    ChainSpec s10;
    s10.length = 10;
    ChainSpec s100 = s10;
    s100.length = 100;
    const int k10 = relative_value_iteration(build_chain(s10), 1e-2, 1000000).iterations;
    const int k100 = relative_value_iteration(build_chain(s100), 1e-2, 1000000).iterations;
    CHECK(k100 > k10);
}

TEST_CASE("span of v* is bounded by the mixing time on the three-state example")
{
    // rewards scaled into [0,1]; tau_mix = 2(tau + 1) with SLEM 1/2 for every policy
    const auto cx = build_counterexample();
    const auto opt = solve_exact(cx.mdp.scaled(1.0 / 3.0));
    const double tau_mix = 2.0 * (-1.0 / std::log(0.5) + 1.0);
    CHECK(opt.v_star.maxCoeff() - opt.v_star.minCoeff() <= tau_mix);
}
