#include "mprox/cli.hpp"

#include <cmath>
#include <filesystem>
#include <future>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "mprox/assumptions.hpp"
#include "mprox/errors.hpp"
#include "mprox/io.hpp"
#include "mprox/solvers.hpp"

namespace mprox::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kThresholds[] = {1e-1, 1e-2, 1e-3};

struct Problem {
    Mdp mdp;
    FeatureMaps features;
    double unnormalized_scale = 1.0; ///< multiply rewards/gains by this for the unnormalized scale
    bool identity = false;
};

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

Problem build_problem(const ExperimentConfig& cfg)
{
    if (!cfg.env.empty() && !cfg.mdp_path.empty()) throw ConfigError("env: set either env or mdp, not both");
    if (cfg.env.empty() && cfg.mdp_path.empty()) throw ConfigError("env: one of env or mdp is required");
    if (cfg.feature_set != "default" && cfg.feature_set != "identity")
        throw ConfigError("feature_set: expected default or identity");

    auto finish = [&](Mdp mdp, std::optional<FeatureMaps> builtin, double scale) {
        FeatureMaps features = FeatureMaps::identity(mdp);
        if (!cfg.features_path.empty()) {
            try {
                features = load_features(cfg.features_path);
            } catch (const InvalidModel& e) {
                throw ConfigError(std::string("features: ") + e.what());
            }
        } else if (cfg.feature_set == "default" && builtin) {
            features = *builtin;
        }
        const bool ident = is_identity_features(features);
        return Problem{std::move(mdp), std::move(features), scale, ident};
    };

    if (!cfg.mdp_path.empty()) {
        try {
            return finish(load_mdp(cfg.mdp_path), std::nullopt, 1.0);
        } catch (const InvalidModel& e) {
            throw ConfigError(std::string("mdp: ") + e.what());
        }
    }
    try {
        if (cfg.env == "counterexample") {
            Counterexample cx = build_counterexample();
            return finish(std::move(cx.mdp), std::move(cx.features), 1.0);
        }
        if (cfg.env == "gridworld") return finish(build_gridworld(cfg.grid), std::nullopt, 1.0);
        if (cfg.env == "chain") {
            ChainSpec spec = cfg.chain;
            spec.seed = cfg.seed;
            Mdp mdp = build_chain(spec);
            std::optional<FeatureMaps> feats;
            if (cfg.features_path.empty() && cfg.feature_set == "default")
                feats = build_chain_features(mdp, spec, solve_exact(mdp));
            return finish(std::move(mdp), std::move(feats), chain_reward_scale(spec));
        }
    } catch (const InvalidModel& e) {
        throw ConfigError(std::string("env: ") + e.what());
    }
    throw ConfigError("env: unknown environment '" + cfg.env + "'");
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name)
{
    return (std::filesystem::path(cfg.out) / name).string();
}

void ensure_out_dir(const ExperimentConfig& cfg)
{
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    if (!std::filesystem::is_directory(cfg.out)) throw ConfigError("out: cannot create directory " + cfg.out);
}

json nan_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct SolverOutput {
    std::string name;
    std::string csv;
    json summary;
};

json thresholds_json(const std::vector<std::pair<long long, double>>& series)
{
    json out;
    for (double thr : kThresholds) {
        json hit = nullptr;
        for (const auto& [t, v] : series) {
            if (std::isfinite(v) && v <= thr) {
                hit = t;
                break;
            }
        }
        std::ostringstream key;
        key << thr;
        out[key.str()] = hit;
    }
    return out;
}

SolverOutput run_saddle_solver(const std::string& name, const RelaxedProblem& prob, const SolverConfig& sc,
                               const RunOptions& opts, double unnormalized_scale)
{
    const SolveTrace trace = run(prob, sc, opts);
    std::vector<std::pair<long long, double>> series;
    std::vector<std::pair<long long, double>> last_series;
    for (const auto& cp : trace.checkpoints) {
        series.emplace_back(cp.t, cp.suboptimality * unnormalized_scale);
        last_series.emplace_back(cp.t, cp.last_suboptimality * unnormalized_scale);
    }
    const auto& fin = trace.checkpoints.back();
    json s;
    s["solver"] = name;
    s["eta"] = sc.eta;
    s["iterations"] = sc.num_iters;
    s["final_suboptimality"] = nan_null(fin.suboptimality);
    s["final_last_iterate_suboptimality"] = nan_null(fin.last_suboptimality);
    s["final_rho"] = nan_null(fin.rho_t);
    s["final_flow_residual_l1"] = fin.flow_residual_l1;
    s["iterations_to_threshold"] = thresholds_json(series);
    s["last_iterate_iterations_to_threshold"] = thresholds_json(last_series);
    s["bounds_checked"] = trace.bounds_checked;
    s["bound_violations"] = trace.bound_violations;
    s["warnings"] = trace.warnings;
    s["unnormalized_scale_final_suboptimality"] = nan_null(fin.suboptimality * unnormalized_scale);
    int eval_failures = 0;
    for (const auto& cp : trace.checkpoints) eval_failures += cp.eval_error.empty() ? 0 : 1;
    s["evaluation_failures"] = eval_failures;
    return SolverOutput{name, trace_to_csv(trace), s};
}

SolverOutput run_value_iteration(const Mdp& mdp, const OptimalSolution& opt, const ExperimentConfig& cfg,
                                 double unnormalized_scale)
{
    std::vector<std::pair<long long, double>> spans;
    SolveTrace rows; // reuse the CSV writer: gap = span residual
    std::vector<std::pair<long long, double>> subopt;
    RviOptions ro;
    auto record = [&](int k, double span, const Vec& v) {
        Checkpoint cp;
        cp.t = k;
        cp.gap_vs_ref = span;
        cp.flow_residual_l1 = kNaN;
        cp.bound_rhs = kNaN;
        try {
            cp.rho_t = average_reward(mdp, deterministic_policy(greedy_actions(mdp, v), mdp.num_actions()));
        } catch (const NonUniqueStationary&) {
            cp.rho_t = kNaN;
        }
        cp.suboptimality = opt.rho_star - cp.rho_t;
        subopt.emplace_back(k, cp.suboptimality * unnormalized_scale);
        rows.checkpoints.push_back(std::move(cp));
    };
    ro.observer = [&](const RviProgress& p) {
        spans.emplace_back(p.iteration, p.span * unnormalized_scale);
        if (p.iteration % cfg.checkpoint_every == 0) record(p.iteration, p.span, p.v);
    };
    const RviResult res = relative_value_iteration(mdp, cfg.vi_tol / unnormalized_scale, cfg.vi_max_iter, ro);
    if (rows.checkpoints.empty() || rows.checkpoints.back().t != res.iterations)
        record(res.iterations, spans.back().second / unnormalized_scale, res.v);

    json s;
    s["solver"] = "value_iteration";
    s["iterations"] = res.iterations;
    s["tolerance"] = cfg.vi_tol;
    s["final_suboptimality"] = nan_null(rows.checkpoints.back().suboptimality);
    s["final_rho"] = res.rho;
    s["iterations_to_threshold"] = thresholds_json(spans);
    s["greedy_iterations_to_threshold"] = thresholds_json(subopt);
    s["bounds_checked"] = false;
    s["bound_violations"] = 0;
    s["unnormalized_scale_final_suboptimality"] = nan_null(rows.checkpoints.back().suboptimality * unnormalized_scale);
    return SolverOutput{"value_iteration", trace_to_csv(rows), s};
}

std::optional<BoundParams> bound_params(const RelaxedProblem& prob, const OptimalSolution& opt,
                                        const ExperimentConfig& cfg, std::ostream& err)
{
    try {
        const auto erg = estimate_mixing(prob.mdp(), cfg.mixing_samples, cfg.seed, MixingMode::Lenient);
        const auto real = check_realizability(prob, opt, cfg.tol, erg.tau_mix_estimate);
        const auto coh = check_coherence(prob, cfg.u_cap.value_or(std::numeric_limits<double>::infinity()), cfg.tol);
        if (!real.holds || !coh.holds) return std::nullopt;
        BoundParams bp;
        bp.tau_mix = erg.tau_mix_estimate;
        bp.u_bound = is_identity_features(prob.features()) ? 1.0 : std::max(real.u_bound_U, 1e-300);
        bp.reward_scale = std::max(1.0, prob.mdp().max_abs_reward());
        return bp;
    } catch (const NotErgodic& e) {
        err << "warning: bounds not checked: " << e.what() << '\n';
        return std::nullopt;
    }
}

} // namespace

void apply_config_json(ExperimentConfig& cfg, const json& j)
{
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        try {
            if (k == "env") cfg.env = v.get<std::string>();
            else if (k == "mdp") cfg.mdp_path = v.get<std::string>();
            else if (k == "features") cfg.features_path = v.get<std::string>();
            else if (k == "feature_set") cfg.feature_set = v.get<std::string>();
            else if (k == "eta") cfg.eta = v.get<double>();
            else if (k == "iters") cfg.iters = v.get<int>();
            else if (k == "checkpoint_every") cfg.checkpoint_every = v.get<int>();
            else if (k == "solvers")
                cfg.solvers = v.is_string() ? split_list(v.get<std::string>()) : v.get<std::vector<std::string>>();
            else if (k == "out") cfg.out = v.get<std::string>();
            else if (k == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (k == "epsilon") cfg.epsilon = v.get<double>();
            else if (k == "side") cfg.grid.side = v.get<int>();
            else if (k == "reward_state") cfg.grid.reward_state = v.get<int>();
            else if (k == "success_prob") cfg.grid.success_prob = cfg.chain.success_prob = v.get<double>();
            else if (k == "length") cfg.chain.length = v.get<int>();
            else if (k == "num_clusters") cfg.chain.num_clusters = v.get<int>();
            else if (k == "num_random_w_rows") cfg.chain.num_random_w_rows = v.get<int>();
            else if (k == "num_random_f_cols") cfg.chain.num_random_f_cols = v.get<int>();
            else if (k == "normalized_rewards") cfg.chain.normalized_rewards = v.get<bool>();
            else if (k == "vi_tol") cfg.vi_tol = v.get<double>();
            else if (k == "vi_max_iter") cfg.vi_max_iter = v.get<int>();
            else if (k == "mixing_samples") cfg.mixing_samples = v.get<int>();
            else if (k == "tol") cfg.tol = v.get<double>();
            else if (k == "u_cap") cfg.u_cap = v.get<double>();
            else throw ConfigError("config: unknown key '" + k + "'");
        } catch (const json::exception&) {
            throw ConfigError("config: key '" + k + "' has the wrong type");
        }
    }
}

int cmd_solve(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err)
{
    std::optional<Problem> problem;
    std::optional<RelaxedProblem> prob;
    SolverConfig sc;
    try {
        if (cfg.solvers.empty()) throw ConfigError("solvers: at least one solver is required");
        for (const auto& s : cfg.solvers)
            if (s != "mirror_prox" && s != "mirror_descent" && s != "value_iteration")
                throw ConfigError("solvers: unknown solver '" + s + "'");
        problem = build_problem(cfg);
        prob.emplace(problem->mdp, problem->features);
        sc.eta = cfg.eta.value_or(default_step_size(*prob));
        sc.num_iters = cfg.iters;
        sc.checkpoint_every = cfg.checkpoint_every;
        sc.seed = static_cast<long long>(cfg.seed);
        validate_config(sc);
        if (!(cfg.vi_tol > 0.0)) throw ConfigError("vi_tol: must be positive");
        ensure_out_dir(cfg);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidModel& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "solver error: " << e.what() << '\n';
        return kSolverError;
    }

    try {
        const OptimalSolution opt = solve_exact(problem->mdp);
        RunOptions base;
        base.reference = opt;
        base.bounds = bound_params(*prob, opt, cfg, err);

        std::vector<std::future<SolverOutput>> jobs;
        for (const auto& name : cfg.solvers) {
            if (name == "value_iteration") {
                jobs.push_back(std::async(std::launch::async, [&] {
                    return run_value_iteration(problem->mdp, opt, cfg, problem->unnormalized_scale);
                }));
            } else {
                SolverConfig c = sc;
                c.variant = name == "mirror_prox" ? Variant::MirrorProx : Variant::MirrorDescent;
                jobs.push_back(std::async(std::launch::async, [&, c, name] {
                    return run_saddle_solver(name, *prob, c, base, problem->unnormalized_scale);
                }));
            }
        }

        json summary;
        summary["rho_star"] = opt.rho_star;
        summary["unnormalized_scale"] = problem->unnormalized_scale;
        summary["num_states"] = problem->mdp.num_states();
        summary["num_actions"] = problem->mdp.num_actions();
        summary["n"] = prob->n();
        summary["m"] = prob->m();
        summary["k_smooth"] = prob->k_smooth();
        summary["setup_seconds"] = prob->setup_seconds();
        summary["solvers"] = json::object();
        int violations = 0;
        std::vector<std::string> paths;
        for (auto& job : jobs) {
            SolverOutput so = job.get();
            const std::string path = out_path(cfg, so.name + ".csv");
            write_file_atomic(path, so.csv);
            paths.push_back(path);
            violations += so.summary.value("bound_violations", 0);
            summary["solvers"][so.name] = so.summary;
        }
        summary["bound_violations"] = violations;
        const std::string spath = out_path(cfg, "summary.json");
        write_file_atomic(spath, summary.dump(2) + "\n");
        paths.push_back(spath);
        for (const auto& p : paths) out << p << '\n';
        return kOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "solver error: " << e.what() << '\n';
        return kSolverError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "config error: out: " << e.what() << '\n';
        return kConfigError;
    }
}

int cmd_check(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err)
{
    try {
        const Problem problem = build_problem(cfg);
        ensure_out_dir(cfg);
        const RelaxedProblem prob(problem.mdp, problem.features);
        const OptimalSolution opt = solve_exact(problem.mdp);

        AssumptionReport report;
        report.ergodicity = estimate_mixing(problem.mdp, cfg.mixing_samples, cfg.seed, MixingMode::Lenient);
        report.realizability = check_realizability(prob, opt, cfg.tol, report.ergodicity.tau_mix_estimate);
        const double cap = cfg.u_cap.value_or(std::max(1.0, report.realizability.u_bound_U));
        report.coherence = check_coherence(prob, cap, cfg.tol);

        json j = report_to_json(report);
        j["holds"] = report.realizability.holds && report.coherence.holds;
        const std::string path = out_path(cfg, "report.json");
        write_file_atomic(path, j.dump(2) + "\n");
        out << path << '\n';
        if (!report.ergodicity.all_ergodic)
            err << "note: " << report.ergodicity.non_ergodic_count << " of " << report.ergodicity.policies_sampled
                << " deterministic policies are not ergodic\n";
        return (report.realizability.holds && report.coherence.holds) ? kOk : kCheckFailed;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "solver error: " << e.what() << '\n';
        return kSolverError;
    }
}

int cmd_counterexample(double epsilon, std::ostream& out, std::ostream& err)
{
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        err << "config error: epsilon: must lie in [0,1]\n";
        return kConfigError;
    }
    const Counterexample cx = build_counterexample();
    const Mat q = build_q_matrix(cx.mdp);
    const Vec y = counterexample_y_eps(epsilon);
    const Vec mu = cx.features.w().transpose() * y;
    const Vec u_hat = Vec::Ones(1);
    const Vec v_hat = cx.features.f() * u_hat;

    const double gap = exact_duality_gap(cx.mdp, q, v_hat, mu, cx.opt.v_star, cx.opt.mu_star);
    const Policy pi = extract_policy(mu, cx.mdp.num_states(), cx.mdp.num_actions());
    const double rho = average_reward(cx.mdp, pi);
    const double reward_gap = cx.opt.rho_star - rho;

    json j;
    j["epsilon"] = epsilon;
    j["duality_gap"] = gap;
    j["rho_star"] = cx.opt.rho_star;
    j["rho_extracted"] = rho;
    j["reward_gap"] = reward_gap;
    j["policy"] = json::array();
    for (int x = 0; x < pi.rows(); ++x) j["policy"].push_back({pi(x, 0), pi(x, 1)});
    out << j.dump() << '\n';

    bool ok = std::abs(gap - epsilon) <= 1e-12;
    if (epsilon > 0.0) ok = ok && std::abs(reward_gap - 2.0 / 3.0) <= 1e-12;
    if (!ok) err << "counterexample values differ from the expected ones\n";
    return ok ? kOk : kCheckFailed;
}

int cmd_export(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err)
{
    try {
        const Problem problem = build_problem(cfg);
        ensure_out_dir(cfg);
        const std::string mpath = out_path(cfg, "mdp.json");
        const std::string fpath = out_path(cfg, "features.json");
        write_file_atomic(mpath, mdp_to_json(problem.mdp).dump() + "\n");
        write_file_atomic(fpath, features_to_json(problem.features).dump() + "\n");
        out << mpath << '\n' << fpath << '\n';
        return kOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "solver error: " << e.what() << '\n';
        return kSolverError;
    }
}

int run_main(int argc, char** argv)
{
    CLI::App app{"Mirror Prox solver for average-reward MDPs"};
    app.require_subcommand(1);

    std::string config_path;
    std::string env, mdp, features, feature_set, solvers, out;
    double eta = 0, epsilon = 0, success_prob = 0;
    int iters = 0, checkpoint_every = 0, side = 0, reward_state = 0, length = 0;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub, bool solving) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--env", env, "counterexample | gridworld | chain");
        sub->add_option("--mdp", mdp, "MDP JSON file");
        sub->add_option("--features", features, "feature maps JSON file");
        sub->add_option("--feature-set", feature_set, "default | identity");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "seed for generated instances");
        sub->add_option("--side", side, "gridworld side");
        sub->add_option("--reward-state", reward_state, "gridworld reward state");
        sub->add_option("--success-prob", success_prob, "gridworld/chain success probability");
        sub->add_option("--length", length, "chain length");
        if (solving) {
            sub->add_option("--eta", eta, "step size");
            sub->add_option("--iters", iters, "number of iterations");
            sub->add_option("--checkpoint-every", checkpoint_every, "checkpoint interval");
            sub->add_option("--solvers", solvers, "comma list of mirror_prox,mirror_descent,value_iteration");
        }
    };
    CLI::App* solve = app.add_subcommand("solve", "run solvers and write traces");
    CLI::App* check = app.add_subcommand("check", "check realizability, coherence and mixing");
    CLI::App* cex = app.add_subcommand("counterexample", "evaluate the three-state counterexample");
    CLI::App* exp = app.add_subcommand("export", "write MDP and feature JSON files");
    add_common(solve, true);
    add_common(check, false);
    add_common(exp, false);
    cex->add_option("--epsilon", epsilon, "perturbation in [0,1]")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    if (cex->parsed()) return cmd_counterexample(epsilon, std::cout, std::cerr);

    CLI::App* sub = solve->parsed() ? solve : (check->parsed() ? check : exp);
    ExperimentConfig cfg;
    try {
        if (sub->count("--config")) apply_config_json(cfg, load_json(config_path));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    auto given = [&](const char* flag) { return sub->get_option_no_throw(flag) && sub->count(flag) > 0; };
    if (given("--env")) cfg.env = env;
    if (given("--mdp")) cfg.mdp_path = mdp;
    if (given("--features")) cfg.features_path = features;
    if (given("--feature-set")) cfg.feature_set = feature_set;
    if (given("--out")) cfg.out = out;
    if (given("--seed")) cfg.seed = seed;
    if (given("--side")) cfg.grid.side = side;
    if (given("--reward-state")) cfg.grid.reward_state = reward_state;
    if (given("--success-prob")) cfg.grid.success_prob = cfg.chain.success_prob = success_prob;
    if (given("--length")) cfg.chain.length = length;
    if (given("--eta")) cfg.eta = eta;
    if (given("--iters")) cfg.iters = iters;
    if (given("--checkpoint-every")) cfg.checkpoint_every = checkpoint_every;
    if (given("--solvers")) cfg.solvers = split_list(solvers);

    if (sub == solve) return cmd_solve(cfg, std::cout, std::cerr);
    if (sub == check) return cmd_check(cfg, std::cout, std::cerr);
    return cmd_export(cfg, std::cout, std::cerr);
}

} // namespace mprox::cli
