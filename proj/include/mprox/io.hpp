#pragma once

#include <string>

#include <json.hpp>

#include "mprox/assumptions.hpp"
#include "mprox/mdp.hpp"
#include "mprox/saddle.hpp"
#include "mprox/solvers.hpp"

namespace mprox {

nlohmann::json mdp_to_json(const Mdp& mdp);
Mdp mdp_from_json(const nlohmann::json& j);

nlohmann::json features_to_json(const FeatureMaps& features);
FeatureMaps features_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const AssumptionReport& report);

Mdp load_mdp(const std::string& path);
FeatureMaps load_features(const std::string& path);
nlohmann::json load_json(const std::string& path);

/// Header t,gap,suboptimality,flow_residual_l1,bound_rhs,rho_t; 17 significant digits.
std::string trace_to_csv(const SolveTrace& trace);

/// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

std::string format_double(double v);

} // namespace mprox
