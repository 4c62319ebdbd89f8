#pragma once

#include <Eigen/Dense>
#include <optional>

#include "sfl/errors.hpp"

namespace sfl {

/// x_{k+1} = A x_k + B u_k + E w_k, y_k = C x_k.
struct StateSpaceModel {
    Eigen::MatrixXd A, B, C, E;

    StateSpaceModel(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c, Eigen::MatrixXd e);

    int n_x() const { return static_cast<int>(A.rows()); }
    int n_u() const { return static_cast<int>(B.cols()); }
    int n_y() const { return static_cast<int>(C.rows()); }
    int n_w() const { return static_cast<int>(E.cols()); }
};

/// y_k = A_hat y_[k-l,k-1] + B_hat u_[k-l,k-1] + E_hat w_[k-l,k-1], stacked windows
/// ordered oldest first. With `output_noise` set, E_hat = [0 ... 0 I].
struct VarxModel {
    Eigen::MatrixXd A_hat, B_hat, E_hat;
    int lag;
    bool output_noise;

    VarxModel(Eigen::MatrixXd a_hat, Eigen::MatrixXd b_hat, Eigen::MatrixXd e_hat, int lag,
              bool output_noise = false);

    /// Output-noise constructor: E_hat = [0 I] implied, n_w = n_y.
    VarxModel(Eigen::MatrixXd a_hat, Eigen::MatrixXd b_hat, int lag);

    int n_y() const { return static_cast<int>(A_hat.rows()); }
    int n_u() const { return static_cast<int>(B_hat.cols()) / lag; }
    int n_w() const { return static_cast<int>(E_hat.cols()) / lag; }
};

/// Aligned (u, y[, w]) realization samples over a contiguous time window.
/// Column i of each matrix holds the signal at time start_time + i.
struct RealTrajectory {
    int start_time = 0;
    Eigen::MatrixXd u; // n_u x length
    Eigen::MatrixXd y; // n_y x length
    std::optional<Eigen::MatrixXd> w;

    RealTrajectory() = default;
    RealTrajectory(int start, Eigen::MatrixXd u_, Eigen::MatrixXd y_,
                   std::optional<Eigen::MatrixXd> w_ = std::nullopt);

    int length() const { return static_cast<int>(u.cols()); }
    int end_time() const { return start_time + length() - 1; } // inclusive
    int n_u() const { return static_cast<int>(u.rows()); }
    int n_y() const { return static_cast<int>(y.rows()); }

    Eigen::VectorXd u_at(int t) const { return u.col(t - start_time); }
    Eigen::VectorXd y_at(int t) const { return y.col(t - start_time); }

    /// Sub-window [t0, t1], inclusive.
    RealTrajectory slice(int t0, int t1) const;
};

/// Smallest l with rank [C; CA; ...; CA^{l-1}] = n_x.
int lag(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

/// Observability matrix of depth `depth`.
Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, int depth);

/// State-space -> VARX conversion:
///   A_hat = C A^l O^+,  B_hat = C (Ctrb(B) - A^l O^+ M(B)),  E_hat likewise.
VarxModel varx_from_state_space(const StateSpaceModel& m, int ell);

/// Exact recursion of the realization dynamics. u_seq and w_seq are n_u x N and
/// n_w x N; the returned trajectory covers [start_time, start_time + N - 1].
RealTrajectory simulate_state_space(const StateSpaceModel& m, const Eigen::VectorXd& x0,
                                    const Eigen::MatrixXd& u_seq, const Eigen::MatrixXd& w_seq,
                                    int start_time = 0);

/// VARX recursion from an l-step initial window. u_seq is n_u x N (inputs applied
/// at the N steps after the window). w_seq is n_w x (l + N - 1), aligned with the
/// trajectory from its first time step: column i holds w at time init.start_time + i
/// (the last window entry w_{k-1} is what feeds the final output). The returned
/// trajectory covers the init window plus the N predicted steps; w is stored padded
/// with a trailing zero column.
RealTrajectory simulate_varx(const VarxModel& m, const RealTrajectory& init,
                             const Eigen::MatrixXd& u_seq, const Eigen::MatrixXd& w_seq);

/// Convenience for the output-noise form: w_eff is n_w x N, column i being the
/// disturbance entering the output at predicted step i (i.e. w_{k-1}).
RealTrajectory simulate_varx_output_noise(const VarxModel& m, const RealTrajectory& init,
                                const Eigen::MatrixXd& u_seq, const Eigen::MatrixXd& w_eff);

} // namespace sfl
