#pragma once

#include <string>

#include <json.hpp>

#include "visilin/estimators.hpp"
#include "visilin/identifiability.hpp"
#include "visilin/types.hpp"
#include "visilin/visibility.hpp"

namespace visilin {

// JSON layout: matrices as row-major nested arrays, vectors as flat arrays.
// A system file is {"A": [[..]..], "B": [[..]..]} and may carry the experiment
// fields {"x0": [..], "u": [[..]..], "dt": t} alongside, with u one row per
// time step.

nlohmann::json matrix_to_json(const Eigen::MatrixXd& mat);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what);

nlohmann::json system_to_json(const LtiSystem& sys);
LtiSystem system_from_json(const nlohmann::json& j);

nlohmann::json experiment_to_json(const Experiment& exp);
Experiment experiment_from_json(const nlohmann::json& j);

nlohmann::json subspace_to_json(const Subspace& sub);
Subspace subspace_from_json(const nlohmann::json& j);

nlohmann::json margin_report_to_json(const MarginReport& report);

nlohmann::json fit_result_to_json(const FitResult& fit);

/// Trajectory CSV: header `t,x0,...,x{n-1}`, one row per sample, t = j * dt.
std::string trajectory_to_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& text);

/// Input CSV: header `t,u0,...,u{m-1}`, one row per step.
std::string inputs_to_csv(const Eigen::MatrixXd& u_seq, double dt);
std::pair<Eigen::MatrixXd, double> inputs_from_csv(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
nlohmann::json read_json_file(const std::string& path);

/// Shortest decimal form that round-trips the double exactly.
std::string format_double(double value);

}  // namespace visilin
