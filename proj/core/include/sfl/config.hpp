#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfl/closed_loop.hpp"
#include "sfl/serialize.hpp"

namespace sfl {

/// One JSON document drives every CLI command; fields unused by a command are
/// ignored. CLI flags override individual fields after loading.
struct ExperimentConfig {
    // model source: inline JSON model or a file path (file wins when set)
    std::optional<VarxModel> model;
    std::string model_file;

    DisturbanceSpec disturbance;

    int ell = 2;
    int N = 10;
    int steps = 30;       // closed-loop horizon
    int T = 90;           // offline data length
    int T_hat = 8;        // synthesis chunk length (scheme III)

    std::vector<Scheme> schemes{Scheme::I, Scheme::II, Scheme::III};

    OcpWeights weights;
    std::vector<ChanceRow> chance_rows;
    SocpOptions solver;
    PredictorOptions predictor;

    std::uint64_t seed = 1;
    int n_samples = 100;      // benchmark samples
    int n_mc_samples = 10000; // Monte-Carlo germ samples for PDF export
    int n_bins = 60;
    int workers = 0;          // 0 = hardware concurrency

    Eigen::VectorXd init_mean;
    double init_spread = 1.0;
    double dither = 1e-3;

    std::string out_dir = "out";
};

/// The flight-dynamics example configuration used throughout the tests.
ExperimentConfig aircraft_config();

json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::string& path);

/// All validation failures, each naming the offending field; empty when valid.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

/// Validate and resolve: loads model_file when set, checks every field, throws
/// ConfigError with the full failure list otherwise. Returns the final model.
VarxModel resolve_model(const ExperimentConfig& cfg);

ClosedLoopConfig to_closed_loop_config(const ExperimentConfig& cfg);

} // namespace sfl
