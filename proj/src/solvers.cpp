#include "mprox/solvers.hpp"

#include <cmath>
#include <limits>

#include "mprox/assumptions.hpp"
#include "mprox/errors.hpp"

namespace mprox {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// y_i * exp(e_i), renormalized, evaluated in log space.
Vec exponentiated(const Vec& y, const Vec& e)
{
    if (!e.allFinite()) throw NumericOverflow("exponent is not finite; step size too large?");
    Vec s = y.array().log().matrix() + e;
    const double top = s.maxCoeff();
    if (!std::isfinite(top)) throw NumericOverflow("log-weights are not finite");
    Vec w = (s.array() - top).exp().matrix();
    return w / w.sum();
}

void check_finite(const Vec& u)
{
    if (!u.allFinite()) throw NumericOverflow("u iterate is not finite; step size too large?");
}

double evaluate_policy(const Mdp& mdp, const Policy& pi, std::string& err)
{
    try {
        return average_reward(mdp, pi);
    } catch (const NonUniqueStationary& e) {
        if (err.empty()) err = e.what();
        return kNaN;
    }
}

} // namespace

void validate_config(const SolverConfig& cfg)
{
    if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) throw ConfigError("eta must be positive");
    if (cfg.num_iters <= 0) throw ConfigError("num_iters must be positive");
    if (cfg.checkpoint_every <= 0) throw ConfigError("checkpoint_every must be positive");
    if (cfg.checkpoint_every > cfg.num_iters)
        throw ConfigError("checkpoint_every must not exceed num_iters");
}

std::pair<Iterate, Iterate> mirror_prox_step(const RelaxedProblem& prob, const Iterate& z_t, double eta)
{
    const Mat& wqf = prob.wqf();
    Iterate hat;
    hat.u = z_t.u - eta * (wqf.transpose() * z_t.y);
    hat.y = exponentiated(z_t.y, eta * (prob.wr() + wqf * z_t.u));
    check_finite(hat.u);

    Iterate next;
    next.u = z_t.u - eta * (wqf.transpose() * hat.y);
    next.y = exponentiated(z_t.y, eta * (prob.wr() + wqf * hat.u));
    check_finite(next.u);
    return {std::move(hat), std::move(next)};
}

Iterate mirror_descent_step(const RelaxedProblem& prob, const Iterate& z_t, double eta)
{
    const Mat& wqf = prob.wqf();
    Iterate next;
    next.u = z_t.u - eta * (wqf.transpose() * z_t.y);
    next.y = exponentiated(z_t.y, eta * (prob.wr() + wqf * z_t.u));
    check_finite(next.u);
    return next;
}

Iterate initial_iterate(const RelaxedProblem& prob)
{
    return Iterate{Vec::Zero(prob.n()), Vec::Constant(prob.m(), 1.0 / prob.m())};
}

double default_step_size(const RelaxedProblem& prob)
{
    return 1.0 / (4.0 * std::max(prob.k_smooth(), 1.0));
}

bool is_identity_features(const FeatureMaps& features)
{
    const Mat& f = features.f();
    const Mat& w = features.w();
    return f.rows() == f.cols() && w.rows() == w.cols() && f.isIdentity(0.0) && w.isIdentity(0.0);
}

SolveTrace run(const RelaxedProblem& prob, const SolverConfig& config, const RunOptions& opts)
{
    validate_config(config);
    const Mdp& mdp = prob.mdp();
    const int x_n = mdp.num_states();
    const int a_n = mdp.num_actions();

    SolveTrace trace;
    std::optional<Iterate> z_star = opts.saddle_reference;
    if (!z_star && opts.reference && is_identity_features(prob.features()))
        z_star = Iterate{opts.reference->v_star, opts.reference->mu_star};

    const double eta_safe = 1.0 / (4.0 * prob.k_smooth());
    trace.bounds_checked = opts.bounds.has_value() && config.eta <= eta_safe;
    if (opts.bounds && !trace.bounds_checked)
        trace.warnings.push_back("eta exceeds 1/(4K); bound checks skipped");
    else if (config.eta > eta_safe)
        trace.warnings.push_back("eta exceeds 1/(4K)");

    Iterate z = initial_iterate(prob);
    Vec u_bar = Vec::Zero(prob.n());
    Vec y_bar = Vec::Zero(prob.m());

    for (int t = 1; t <= config.num_iters; ++t) {
        y_bar += (z.y - y_bar) / static_cast<double>(t);
        Iterate hat;
        Iterate next;
        if (config.variant == Variant::MirrorProx) {
            auto step = mirror_prox_step(prob, z, config.eta);
            hat = std::move(step.first);
            next = std::move(step.second);
        } else {
            next = mirror_descent_step(prob, z, config.eta);
            hat = next;
        }
        u_bar += (hat.u - u_bar) / static_cast<double>(t);
        if (opts.observer) opts.observer(t, z, hat, next);
        z = std::move(next);

        if (t % config.checkpoint_every != 0 && t != config.num_iters) continue;

        Checkpoint cp;
        cp.t = t;
        cp.u_bar = u_bar;
        cp.y_bar = y_bar;
        const Vec mu_bar = prob.occupancy(y_bar);
        cp.policy = extract_policy(mu_bar, x_n, a_n);
        cp.rho_t = evaluate_policy(mdp, cp.policy, cp.eval_error);
        cp.flow_residual_l1 = flow_residual(prob.q(), mu_bar);
        const Policy last_pi = extract_policy(prob.occupancy(z.y), x_n, a_n);
        cp.last_rho = evaluate_policy(mdp, last_pi, cp.eval_error);

        if (opts.reference) {
            cp.suboptimality = opts.reference->rho_star - cp.rho_t;
            cp.last_suboptimality = opts.reference->rho_star - cp.last_rho;
        } else {
            cp.suboptimality = kNaN;
            cp.last_suboptimality = kNaN;
        }
        cp.gap_vs_ref = z_star ? relaxed_duality_gap(prob, Iterate{u_bar, y_bar}, *z_star) : kNaN;

        if (trace.bounds_checked) {
            cp.bound_rhs = theorem_bound_rhs(opts.bounds->tau_mix, opts.bounds->u_bound, prob.n(),
                                             prob.m(), config.eta, t);
            if (opts.reference && std::isfinite(cp.suboptimality) &&
                cp.suboptimality / opts.bounds->reward_scale > cp.bound_rhs + 1e-9) {
                cp.bound_violated = true;
                ++trace.bound_violations;
            }
        } else {
            cp.bound_rhs = kNaN;
        }
        trace.checkpoints.push_back(std::move(cp));
    }
    trace.final_iterate = std::move(z);
    return trace;
}

} // namespace mprox
