#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfl/estimator.hpp"
#include "sfl/lti.hpp"
#include "sfl/ocp.hpp"
#include "sfl/pce.hpp"

namespace sfl {

/// Simulated lag-l I/O plant with seeded disturbances; the initial output
/// window is sampled around a configurable mean.
class VarxPlant : public Plant {
public:
    VarxPlant(VarxModel truth, DisturbanceSpec spec, Eigen::VectorXd init_mean,
              double init_spread = 1.0);

    int n_u() const override { return truth_.n_u(); }
    int n_y() const override { return truth_.n_y(); }
    int lag() const override { return truth_.lag; }
    RealTrajectory reset(std::uint64_t episode_seed) override;
    Eigen::VectorXd step(const Eigen::VectorXd& u) override;

    /// Disturbance that entered the most recent output (measured in hindsight).
    const Eigen::VectorXd& last_disturbance() const { return last_w_; }
    int time() const { return t_; }

private:
    VarxModel truth_;
    DisturbanceSpec spec_;
    Eigen::VectorXd init_mean_;
    double init_spread_;
    std::uint64_t seed_ = 0;
    int t_ = 0;
    Eigen::MatrixXd u_win_, y_win_;
    Eigen::VectorXd last_w_;
};

struct ClosedLoopConfig {
    int steps = 30;
    int N = 10;
    int T = 90;      // offline data length
    OcpWeights weights;
    std::vector<ChanceRow> rows;
    OcpBuildOptions build;
    SocpOptions solver;
    double dither = 1e-3;
    Eigen::VectorXd init_mean;  // plant initial output mean
    double init_spread = 1.0;
    int synthesis_chunk = 8;    // near-origin synthesis chunk length (scheme III)
};

struct SchemeReport {
    Scheme scheme = Scheme::I;
    std::uint64_t seed = 0;
    RealTrajectory executed;        // applied inputs / measured outputs / realized w
    double J_cl = 0.0;
    std::vector<double> step_times; // seconds, OCP assembly + solve only
    double time_mean_s = 0.0, time_sd_s = 0.0;
    long long hankel_nonzeros = 0;
    bool failed = false;
    std::string error;
};

/// Offline data records for all three schemes from one seeded collection run
/// under a stabilizing feedback with dither excitation.
struct OfflineData {
    FeedbackLaw law;
    RealTrajectory undisturbed;  // scheme I
    RealTrajectory disturbed;    // scheme II (w recorded)
    RealTrajectory synthesized;  // scheme III
    double synthesis_condition = 0.0;
};

/// Closed-loop record under u = K z + dither for `T` steps from a zero window.
RealTrajectory collect_feedback_data(const VarxModel& truth, const DisturbanceSpec& spec,
                                     const FeedbackLaw& law, int T, std::uint64_t seed,
                                     bool disturbed);

/// Full offline preparation: feedback search on the plant, then one
/// undisturbed and one disturbed record, then the scheme III synthesis.
OfflineData prepare_offline_data(const VarxModel& truth, const DisturbanceSpec& spec,
                                 const ClosedLoopConfig& cfg, std::uint64_t seed);

/// Receding-horizon run: per step, take the last l I/O pairs as the initial
/// window, assemble and solve the scheme's OCP, apply the mean first input,
/// and advance the plant with the shared disturbance stream.
SchemeReport run_closed_loop(Scheme scheme, const VarxModel& truth, const DisturbanceSpec& spec,
                             const RealTrajectory& data, const ClosedLoopConfig& cfg,
                             std::uint64_t seed);

struct BenchmarkRow {
    Scheme scheme;
    long long hankel_nonzeros = 0;
    double time_mean_s = 0.0, time_sd_s = 0.0;
    double J_cl_mean = 0.0;
    int successes = 0, failures = 0;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
    std::vector<SchemeReport> sample_reports; // first sample per scheme, for inspection
};

/// Seeded multi-sample comparison of the schemes; samples are distributed
/// across `workers` threads, each sample fully determined by (seed, index).
BenchmarkResult benchmark_schemes(const VarxModel& truth, const DisturbanceSpec& spec,
                                  const ClosedLoopConfig& cfg, int n_samples, std::uint64_t seed,
                                  int workers = 0,
                                  const std::vector<Scheme>& schemes = {Scheme::I, Scheme::II,
                                                                        Scheme::III});

} // namespace sfl
