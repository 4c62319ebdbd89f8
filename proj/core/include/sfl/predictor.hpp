#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sfl/hankel.hpp"
#include "sfl/lti.hpp"
#include "sfl/pce.hpp"

namespace sfl {

/// y_free = M * u_free + b, the affine dependence of the solved output
/// coefficients on the free input coefficients of one basis index.
struct AffineMap {
    Eigen::MatrixXd M;
    Eigen::VectorXd b;
};

struct SolveReport {
    std::vector<double> residuals; // pinned-row residual per solved block
    std::vector<int> ranks;
    int n_g = 0;
};

/// Coefficient-level prediction over [1, N] together with the combination
/// vectors of every linear solve.
struct Prediction {
    PceTrajectory u, y;
    std::vector<Eigen::VectorXd> g; // indexed by basis index j (may be empty per j)
    SolveReport report;
};

struct PredictorOptions {
    double rank_rtol = 1e-10;  // singular value cutoff in the min-norm solves
    double pe_rtol = 1e-8;     // rank tolerance of the excitation certificates
    double pin_tol = 1e-6;     // pinned-row residual bound, scaled by (1 + |rhs|)
    double ridge = 0.0;        // optional Tikhonov weight on g for noisy data
};

/// Trajectory prediction from undisturbed input-output data: the full-horizon
/// two-stage solve, the mean propagation with its precomputed disturbance-mean
/// response, the shortened per-index propagation, and their assembly into a
/// full coefficient prediction.
///
/// All solve maps are prepared at construction from the recorded data, so a
/// constructed predictor answers any initial condition without refactoring.
class UndisturbedPredictor {
public:
    UndisturbedPredictor(RealTrajectory ud_data, int ell, int N, PredictorOptions opts = {});

    const RankCertificate& pe_certificate() const { return pe_; }
    int ell() const { return ell_; }
    int horizon() const { return N_; }
    int n_g() const { return n_g_; }

    /// Deterministic realization prediction: pin the l-step init window and the
    /// future inputs, read the future outputs. Returns n_y x N.
    Eigen::MatrixXd predict(const RealTrajectory& init, const Eigen::MatrixXd& u_future,
                            Eigen::VectorXd* g_out = nullptr, double* residual = nullptr) const;

    /// Forward response of the disturbance mean: column k-1 is y^w_k, k in [1, N],
    /// with y^w_1 = mean_w and the rest from the pinned autonomous solve.
    Eigen::MatrixXd precompute_yw(const Eigen::VectorXd& mean_w) const;

    /// Mean (j = 0) propagation: y0_k = y^u_k + sum_{i<=k} y^w_i.
    Eigen::MatrixXd propagate_mean(const RealTrajectory& init, const Eigen::MatrixXd& u0,
                                   const Eigen::VectorXd& mean_w,
                                   Eigen::VectorXd* g_out = nullptr,
                                   double* residual = nullptr) const;

    /// Per-index propagation with the shortened horizon: returns y^j over
    /// [k'+1, N] (n_y x (N - k')); the first column is the pinned w coefficient.
    /// u_j must have N - k' columns (inputs at steps k'+1 .. N).
    Eigen::MatrixXd propagate_pce_j(int kprime, const Eigen::MatrixXd& u_j,
                                    const Eigen::VectorXd& w_coeff,
                                    Eigen::VectorXd* g_out = nullptr,
                                    double* residual = nullptr) const;

    /// Full random-variable propagation: j = 0 through propagate_mean, j >= 1
    /// through propagate_pce_j. u_coeffs covers [1, N] and must satisfy the
    /// causality zeros; init is the measured deterministic window.
    Prediction propagate_all(const JointBasis& basis, const DisturbanceSpec& spec,
                             const RealTrajectory& init, const PceTrajectory& u_coeffs) const;

    /// Uncertain initial window: init_coeffs covers [1-l, 0] on a basis with an
    /// init block; its j = 0 column is the mean window, init-block columns hold
    /// the centered directions. Disturbance indices behave as in propagate_all.
    Prediction propagate_uncertain_init(const JointBasis& basis, const DisturbanceSpec& spec,
                                        const PceTrajectory& init_coeffs,
                                        const PceTrajectory& u_coeffs) const;

    /// Affine maps for embedding the dynamics into an optimization problem.
    /// mean_map: y0 stacked over [1, N] against u0 stacked over [1, N].
    AffineMap mean_map(const RealTrajectory& init, const Eigen::VectorXd& mean_w) const;
    /// pce_map: y^j stacked over [k'+2, N] against u^j stacked over [k'+1, N];
    /// y^j_{k'+1} equals w_coeff identically and is not part of the map.
    AffineMap pce_map(int kprime, const Eigen::VectorXd& w_coeff) const;

private:
    struct Stage {
        Eigen::MatrixXd pin_pinv; // n_g x pin_rows
        Eigen::MatrixXd out;      // out_rows x n_g
        Eigen::MatrixXd solve_map; // out * pin_pinv
        Eigen::MatrixXd pin;      // kept for residual checks
        int rank = 0;
    };

    Stage make_stage(int data_len, int past, int horizon, bool pin_first_output) const;
    Eigen::VectorXd solve_stage(const Stage& s, const Eigen::VectorXd& rhs,
                                double* residual) const;

    RealTrajectory data_;
    int ell_, N_, n_g_;
    PredictorOptions opts_;
    RankCertificate pe_;
    Stage full_;               // past l, horizon N
    Stage yw_;                 // past l, horizon N-1 (disturbance-mean response)
    std::vector<Stage> per_k_; // shortened stages, k' = 0 .. N-1
};

/// Trajectory prediction from disturbed data (u, y, w): the per-index stacked
/// Hankel solve that pins inputs, the initial window and all disturbance
/// coefficients, and returns the future output coefficients.
class DisturbedPredictor {
public:
    DisturbedPredictor(RealTrajectory d_data, int ell, int N, PredictorOptions opts = {});

    const RankCertificate& pe_certificate() const { return pe_; }          // (u, w) excitation
    const RankCertificate& pin_certificate() const { return pin_rank_; }   // pinned-row rank
    int n_g() const { return n_g_; }

    /// Per-index prediction. init carries the realized (u, y) window over
    /// [1-l, 0] and the realized disturbances over [1-l, -1] in its w field
    /// (the final w column is ignored). u_coeffs covers [1, N]; w_coeffs covers
    /// disturbance times [0, N-1] (the germ pattern per step).
    Prediction predict(const JointBasis& basis, const DisturbanceSpec& spec,
                       const RealTrajectory& init, const PceTrajectory& u_coeffs) const;

    /// Affine map of one basis index: y^j over [1, N] against u^j over [1, N]
    /// (the OCP masks the causality zeros itself). `fixed_rhs` must contain the
    /// pinned init and disturbance entries; see rhs layout accessors below.
    AffineMap map_for(const Eigen::VectorXd& rhs_fixed) const;

    /// Pinned right-hand side of index j given init and the disturbance pattern;
    /// the future-input entries are left zero.
    Eigen::VectorXd fixed_rhs(const JointBasis& basis, const DisturbanceSpec& spec,
                              const RealTrajectory& init, int j) const;

    int rhs_size() const { return static_cast<int>(pin_pinv_.cols()); }
    /// Column offset of input u at future step k in [1, N] inside the rhs.
    int u_future_offset(int k) const;

private:
    RealTrajectory data_;
    int ell_, N_, n_g_, nu_, ny_, nw_;
    PredictorOptions opts_;
    RankCertificate pe_, pin_rank_;
    Eigen::MatrixXd pin_, pin_pinv_, out_, solve_map_;
};

} // namespace sfl
