#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sfl/closed_loop.hpp"
#include "sfl/hankel.hpp"
#include "sfl/lti.hpp"
#include "sfl/ocp.hpp"
#include "sfl/pce.hpp"
#include "sfl/predictor.hpp"

namespace sfl {

using nlohmann::json;

// Matrices travel as {"rows", "cols", "data"} with data in row-major order.
json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

json to_json(const StateSpaceModel& m);
StateSpaceModel state_space_from_json(const json& j);

json to_json(const VarxModel& m);
VarxModel varx_from_json(const json& j);

json to_json(const DisturbanceSpec& spec);
DisturbanceSpec disturbance_spec_from_json(const json& j);

json to_json(const RealTrajectory& t);
RealTrajectory trajectory_from_json(const json& j);

json to_json(const RankCertificate& c);
json to_json(const SolveReport& r);
json to_json(const PceTrajectory& t);
json to_json(const OcpSolution& s);
json to_json(const SchemeReport& r);
json to_json(const BenchmarkResult& r);

// CSV formats. Trajectories: header k,u_1..u_nu,y_1..y_ny[,w_1..w_nw], one row
// per time step; the w columns appear only when the record carries them.
std::string trajectory_to_csv(const RealTrajectory& t);
RealTrajectory trajectory_from_csv(const std::string& text);

/// PCE coefficients: header k,j,component,value.
std::string pce_to_csv(const PceTrajectory& t);

/// Histogram rows per step: header k,bin_left,bin_right,density.
std::string histograms_to_csv(const std::vector<std::vector<HistogramBin>>& per_step,
                              int first_k = 1);

/// Benchmark table: header scheme,nonzeros,time_mean_s,time_sd_s,J_cl.
std::string benchmark_to_csv(const BenchmarkResult& r);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

} // namespace sfl
