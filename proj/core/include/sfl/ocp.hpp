#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sfl/lti.hpp"
#include "sfl/pce.hpp"
#include "sfl/predictor.hpp"
#include "sfl/socp.hpp"

namespace sfl {

enum class Scheme { I, II, III };

const char* to_string(Scheme s);

/// Two-sided chance constraint on one output component over steps [2, N]:
/// P(lower <= Y^c_k <= upper) >= level, enforced conservatively as
/// lower <= mean - kappa*std and mean + kappa*std <= upper.
struct ChanceRow {
    int component = 0;
    double lower, upper;
    double level = 0.8;
    double kappa = 3.0;
};

/// Backoff factor from the two-sided Chebyshev bound at the given level.
double chebyshev_kappa(double level);

struct OcpWeights {
    Eigen::MatrixXd Q, R;
};

/// Assembled coefficient-space problem: decision vector = free input
/// coefficients per basis index (mean block first, then each index's
/// shortened block), outputs eliminated through the predictor's affine maps.
struct OcpProblem {
    int N = 0, n_u = 0, n_y = 0;
    JointBasis basis;
    DisturbanceSpec spec;
    OcpWeights weights;
    std::vector<ChanceRow> rows;

    // per basis index j: first decided input step, first mapped output step,
    // offset of its block in the decision vector, and the output map
    std::vector<int> u_first, y_first, offset;
    std::vector<AffineMap> maps; // y stacked over [y_first, N] vs u over [u_first, N]
    int n_dec = 0;
    double cost_const = 0.0; // contribution of the fixed parts b_j' Q b_j

    // cone-program blocks
    Eigen::MatrixXd P, G;
    Eigen::VectorXd q, h;
    ConeDims dims;
};

struct OcpSolution {
    PceTrajectory u, y;   // optimal coefficients over [1, N]
    double cost = 0.0;
    SolverStatus status = SolverStatus::numerical_breakdown;
    int iterations = 0;
    double gap = 0.0, pres = 0.0, dres = 0.0;
    Eigen::VectorXd decisions;
};

/// Conservative mean +/- kappa*std bracketing of one chance row; throws
/// InvalidBounds when the interval is empty.
void validate_chance_row(const ChanceRow& row, int n_y);

struct OcpBuildOptions {
    PredictorOptions predictor;
    double ridge = 0.0; // optional Tikhonov weight on the decisions
};

/// Assemble from undisturbed (or synthesized) data via the per-index
/// shortened-horizon maps (Schemes I and III).
OcpProblem build_ocp(const UndisturbedPredictor& pred, const JointBasis& basis,
                     const DisturbanceSpec& spec, const RealTrajectory& init,
                     const OcpWeights& weights, const std::vector<ChanceRow>& rows,
                     const OcpBuildOptions& opts = {});

/// Assemble from disturbed data via the full-stack per-index maps (Scheme II);
/// init must carry the realized disturbance window.
OcpProblem build_ocp(const DisturbedPredictor& pred, const JointBasis& basis,
                     const DisturbanceSpec& spec, const RealTrajectory& init,
                     const OcpWeights& weights, const std::vector<ChanceRow>& rows,
                     const OcpBuildOptions& opts = {});

/// One-call assembly: constructs the scheme's predictor from the raw data and
/// builds the problem (data volume and solve maps are recomputed every call).
OcpProblem build_ocp(Scheme scheme, const RealTrajectory& data, int ell, int N,
                     const JointBasis& basis, const DisturbanceSpec& spec,
                     const RealTrajectory& init, const OcpWeights& weights,
                     const std::vector<ChanceRow>& rows, const OcpBuildOptions& opts = {});

/// Solve and unpack; throws InfeasibleProblem / UnboundedProblem /
/// MaxIterationsExceeded / NumericalBreakdown on non-optimal outcomes.
OcpSolution solve_ocp(const OcpProblem& p, const SocpOptions& opts = {});

/// Recompute the reported cost from the returned coefficients (audit).
double recompute_cost(const OcpProblem& p, const OcpSolution& sol);

struct OpenLoopResult {
    OcpSolution solution;
    // per sampled component: histogram data per step and empirical chance-
    // constraint satisfaction frequency per step (steps 1..N)
    std::vector<std::vector<HistogramBin>> hist_y1, hist_y2;
    std::vector<double> satisfaction; // component from the first chance row
    Eigen::MatrixXd sample_std;       // n_y x N empirical std per step
};

/// Open-loop study: solve the OCP, then Monte-Carlo sample the optimal
/// coefficient trajectories to get per-step output distributions and the
/// empirical chance-constraint satisfaction rate.
OpenLoopResult open_loop_experiment(const OcpProblem& p, int n_samples, std::uint64_t seed,
                                    int n_bins = 60, const SocpOptions& solver_opts = {});

} // namespace sfl
