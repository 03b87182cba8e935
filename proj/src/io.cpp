#include "mprox/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mprox/errors.hpp"

namespace mprox {

using nlohmann::json;

namespace {

json vec_json(const Vec& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json mat_json(const Mat& m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec_json(m.row(i).transpose()));
    return out;
}

Mat mat_from(const json& j, const char* name)
{
    if (!j.is_array() || j.empty()) throw InvalidModel(std::string(name) + " must be a non-empty array");
    const auto rows = j.size();
    const auto cols = j[0].size();
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw InvalidModel(std::string(name) + " row " + std::to_string(i) + " has inconsistent length");
        for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

json mdp_to_json(const Mdp& mdp)
{
    json j;
    j["num_states"] = mdp.num_states();
    j["num_actions"] = mdp.num_actions();
    json tr = json::array();
    json rw = json::array();
    for (int x = 0; x < mdp.num_states(); ++x) {
        json rows = json::array();
        json rr = json::array();
        for (int a = 0; a < mdp.num_actions(); ++a) {
            rows.push_back(vec_json(mdp.transitions().row(mdp.pair(x, a)).transpose()));
            rr.push_back(mdp.reward(x, a));
        }
        tr.push_back(rows);
        rw.push_back(rr);
    }
    j["transitions"] = tr;
    j["rewards"] = rw;
    if (mdp.reward_range_relaxed()) j["reward_range_relaxed"] = true;
    return j;
}

Mdp mdp_from_json(const json& j)
{
    try {
        const int xs = j.at("num_states").get<int>();
        const int as = j.at("num_actions").get<int>();
        if (xs <= 0 || as <= 0) throw InvalidModel("num_states and num_actions must be positive");
        const json& tr = j.at("transitions");
        const json& rw = j.at("rewards");
        if (!tr.is_array() || static_cast<int>(tr.size()) != xs)
            throw InvalidModel("transitions must have num_states entries");
        if (!rw.is_array() || static_cast<int>(rw.size()) != xs)
            throw InvalidModel("rewards must have num_states entries");
        Mat p(xs * as, xs);
        Vec r(xs * as);
        for (int x = 0; x < xs; ++x) {
            if (!tr[x].is_array() || static_cast<int>(tr[x].size()) != as)
                throw InvalidModel("transitions[" + std::to_string(x) + "] must have num_actions entries");
            if (!rw[x].is_array() || static_cast<int>(rw[x].size()) != as)
                throw InvalidModel("rewards[" + std::to_string(x) + "] must have num_actions entries");
            for (int a = 0; a < as; ++a) {
                const json& row = tr[x][a];
                if (!row.is_array() || static_cast<int>(row.size()) != xs)
                    throw InvalidModel("transitions[" + std::to_string(x) + "][" + std::to_string(a) +
                                       "] must have num_states entries");
                for (int xn = 0; xn < xs; ++xn) p(x * as + a, xn) = row[xn].get<double>();
                r(x * as + a) = rw[x][a].get<double>();
            }
        }
        return Mdp(xs, as, p, r, j.value("reward_range_relaxed", false));
    } catch (const json::exception& e) {
        throw InvalidModel(std::string("malformed MDP JSON: ") + e.what());
    }
}

json features_to_json(const FeatureMaps& features)
{
    return json{{"f", mat_json(features.f())}, {"w", mat_json(features.w())}};
}

FeatureMaps features_from_json(const json& j)
{
    try {
        return FeatureMaps(mat_from(j.at("f"), "f"), mat_from(j.at("w"), "w"));
    } catch (const json::exception& e) {
        throw InvalidModel(std::string("malformed feature JSON: ") + e.what());
    }
}

json report_to_json(const AssumptionReport& report)
{
    const auto& re = report.realizability;
    const auto& co = report.coherence;
    const auto& er = report.ergodicity;
    json j;
    j["realizability"] = {{"holds", re.holds},
                          {"v_residual", re.v_residual},
                          {"y_residual", re.y_residual},
                          {"u_star", vec_json(re.u_star)},
                          {"y_star", vec_json(re.y_star)},
                          {"shift", re.shift},
                          {"u_bound_U", nan_safe(re.u_bound_U)}};
    j["coherence"] = {{"holds", co.holds},
                      {"max_vertex_residual", co.max_vertex_residual},
                      {"witness_index", co.witness_index ? json(*co.witness_index) : json(nullptr)},
                      {"vertex_residuals", co.vertex_residuals},
                      {"max_coefficient_linf", co.max_coefficient_linf},
                      {"within_u_cap", co.within_u_cap}};
    j["ergodicity"] = {{"tau_mix_estimate", er.tau_mix_estimate},
                       {"tau", er.tau},
                       {"slem_max", er.slem_max},
                       {"policies_sampled", er.policies_sampled},
                       {"non_ergodic_count", er.non_ergodic_count},
                       {"enumerated", er.enumerated},
                       {"all_ergodic", er.all_ergodic},
                       {"slems", er.slems}};
    return j;
}

json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
}

Mdp load_mdp(const std::string& path) { return mdp_from_json(load_json(path)); }

FeatureMaps load_features(const std::string& path) { return features_from_json(load_json(path)); }

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trace_to_csv(const SolveTrace& trace)
{
    std::ostringstream os;
    os << "t,gap,suboptimality,flow_residual_l1,bound_rhs,rho_t\n";
    for (const auto& cp : trace.checkpoints) {
        os << cp.t << ',' << format_double(cp.gap_vs_ref) << ',' << format_double(cp.suboptimality) << ','
           << format_double(cp.flow_residual_l1) << ',' << format_double(cp.bound_rhs) << ','
           << format_double(cp.rho_t) << '\n';
    }
    return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << content;
        if (!out) throw ConfigError("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

} // namespace mprox
