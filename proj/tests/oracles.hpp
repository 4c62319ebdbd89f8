// Independent reference implementations used to cross-check the library.
// Everything here is written directly from the defining recursions, without
// reusing the library's own solve paths.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sfl/estimator.hpp"
#include "sfl/lti.hpp"
#include "sfl/pce.hpp"
#include "sfl/rng.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Direct coefficient recursion: every basis index of a lag-ell model under
/// the output-noise form evolves independently as
///   y^j_k = A_hat * y^j-window + B_hat * u^j-window + w^j_{k-1},
/// with zero initial coefficient windows for j >= 1 and the measured window at
/// j = 0. Returns the coefficients over [1, N], one n_y x size block per step.
inline std::vector<MatrixXd> pce_recursion(const sfl::VarxModel& m, const sfl::JointBasis& basis,
                                           const sfl::DisturbanceSpec& spec,
                                           const sfl::RealTrajectory& init,
                                           const sfl::PceTrajectory& u_coeffs) {
    const int ell = m.lag, n_y = m.n_y(), n_u = m.n_u(), N = basis.N;
    const int size = basis.size();
    // windows per coefficient index, columns oldest first
    std::vector<MatrixXd> uw(size, MatrixXd::Zero(n_u, ell));
    std::vector<MatrixXd> yw(size, MatrixXd::Zero(n_y, ell));
    uw[0] = init.u.rightCols(ell);
    yw[0] = init.y.rightCols(ell);

    std::vector<MatrixXd> out(N, MatrixXd::Zero(n_y, size));
    for (int k = 1; k <= N; ++k) {
        const MatrixXd wk = sfl::disturbance_coeffs(basis, spec, k - 1); // drives y_k
        for (int j = 0; j < size; ++j) {
            VectorXd ufl = Eigen::Map<const VectorXd>(uw[j].data(), uw[j].size());
            VectorXd yfl = Eigen::Map<const VectorXd>(yw[j].data(), yw[j].size());
            VectorXd yk = m.A_hat * yfl + m.B_hat * ufl + wk.col(j);
            out[k - 1].col(j) = yk;
            // shift windows with this step's input coefficient
            uw[j].leftCols(ell - 1) = uw[j].rightCols(ell - 1).eval();
            uw[j].col(ell - 1) = u_coeffs.at(k).col(j);
            yw[j].leftCols(ell - 1) = yw[j].rightCols(ell - 1).eval();
            yw[j].col(ell - 1) = yk;
        }
    }
    return out;
}

/// Companion-form state z_k = (u-window, y-window); returns (F, G, H) with
/// z_{k+1} = F z_k + G u_k + H w_k for an output-noise model.
inline void companion(const sfl::VarxModel& m, MatrixXd& F, MatrixXd& G, MatrixXd& H) {
    const int ell = m.lag, n_u = m.n_u(), n_y = m.n_y();
    const int nu = ell * n_u, nz = nu + ell * n_y;
    F = MatrixXd::Zero(nz, nz);
    G = MatrixXd::Zero(nz, n_u);
    H = MatrixXd::Zero(nz, n_y);
    // input window shift
    for (int i = 0; i < ell - 1; ++i)
        F.block(i * n_u, (i + 1) * n_u, n_u, n_u).setIdentity();
    G.block((ell - 1) * n_u, 0, n_u, n_u).setIdentity();
    // output window shift
    for (int i = 0; i < ell - 1; ++i)
        F.block(nu + i * n_y, nu + (i + 1) * n_y, n_y, n_y).setIdentity();
    // newest output row
    F.block(nu + (ell - 1) * n_y, 0, n_y, nu) = m.B_hat;
    F.block(nu + (ell - 1) * n_y, nu, n_y, ell * n_y) = m.A_hat;
    H.block(nu + (ell - 1) * n_y, 0, n_y, n_y).setIdentity();
}

/// Model-based mean and covariance recursion over [1, N] for a deterministic
/// initial window and deterministic input sequence (n_u x N). Outputs the
/// per-step mean (n_y x N) and output covariance diagonal blocks.
inline void moments(const sfl::VarxModel& m, const sfl::RealTrajectory& init,
                    const MatrixXd& u_seq, const VectorXd& w_mean, const MatrixXd& w_cov,
                    MatrixXd& y_mean, std::vector<MatrixXd>& y_cov) {
    MatrixXd F, G, H;
    companion(m, F, G, H);
    const int ell = m.lag, n_u = m.n_u(), n_y = m.n_y(), N = static_cast<int>(u_seq.cols());
    const int nu = ell * n_u, nz = nu + ell * n_y;
    VectorXd z(nz);
    z.head(nu) = Eigen::Map<const VectorXd>(init.u.rightCols(ell).data(), nu);
    z.tail(ell * n_y) =
        Eigen::Map<const VectorXd>(init.y.rightCols(ell).data(), ell * n_y);
    MatrixXd S = MatrixXd::Zero(nz, nz);
    y_mean.resize(n_y, N);
    y_cov.assign(N, MatrixXd::Zero(n_y, n_y));
    for (int k = 0; k < N; ++k) {
        z = F * z + G * u_seq.col(k) + H * w_mean;
        S = F * S * F.transpose() + H * w_cov * H.transpose();
        y_mean.col(k) = z.tail(n_y);
        y_cov[k] = S.bottomRightCorner(n_y, n_y);
    }
}

/// Brute-force matrix rank via column-pivoted elimination, independent of the
/// library's SVD-based rank.
inline int brute_rank(MatrixXd a, double tol_scale = 1e-10) {
    const double tol = tol_scale * std::max(1.0, a.cwiseAbs().maxCoeff());
    int rank = 0;
    for (Eigen::Index c = 0; c < a.cols() && rank < a.rows(); ++c) {
        Eigen::Index piv;
        a.col(c).tail(a.rows() - rank).cwiseAbs().maxCoeff(&piv);
        piv += rank;
        if (std::abs(a(piv, c)) < tol) continue;
        a.row(piv).swap(a.row(rank));
        for (Eigen::Index r = rank + 1; r < a.rows(); ++r)
            a.row(r) -= (a(r, c) / a(rank, c)) * a.row(rank);
        ++rank;
    }
    return rank;
}

/// Equality-constrained QP min 1/2 x'Px + q'x s.t. Ax = b via the dense KKT
/// system; used as the solver oracle for problems without inequalities.
inline VectorXd kkt_qp(const MatrixXd& P, const VectorXd& q, const MatrixXd& A,
                       const VectorXd& b) {
    const int n = static_cast<int>(q.size()), p = static_cast<int>(A.rows());
    MatrixXd K = MatrixXd::Zero(n + p, n + p);
    K.topLeftCorner(n, n) = P;
    if (p) {
        K.topRightCorner(n, p) = A.transpose();
        K.bottomLeftCorner(p, n) = A;
    }
    VectorXd rhs(n + p);
    rhs.head(n) = -q;
    if (p) rhs.tail(p) = b;
    return K.colPivHouseholderQr().solve(rhs).head(n);
}

/// Random observable state-space system with spectral radius scaled under 1.
inline sfl::StateSpaceModel random_observable(sfl::rng::Stream& s, int n_x, int n_u, int n_y,
                                              double radius = 0.9) {
    for (;;) {
        MatrixXd A(n_x, n_x), B(n_x, n_u), C(n_y, n_x), E(n_x, n_y);
        for (int i = 0; i < n_x; ++i)
            for (int j = 0; j < n_x; ++j) A(i, j) = s.uniform(-1, 1);
        for (int i = 0; i < n_x; ++i)
            for (int j = 0; j < n_u; ++j) B(i, j) = s.uniform(-1, 1);
        for (int i = 0; i < n_y; ++i)
            for (int j = 0; j < n_x; ++j) C(i, j) = s.uniform(-1, 1);
        for (int i = 0; i < n_x; ++i)
            for (int j = 0; j < n_y; ++j) E(i, j) = s.uniform(-1, 1);
        const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
        if (rho > 1e-8) A *= radius / rho;
        // require full observability with lag <= n_x
        MatrixXd obs(n_x * n_y, n_x);
        MatrixXd Ak = MatrixXd::Identity(n_x, n_x);
        for (int i = 0; i < n_x; ++i) {
            obs.middleRows(i * n_y, n_y) = C * Ak;
            Ak = Ak * A;
        }
        if (brute_rank(obs) == n_x) return sfl::StateSpaceModel(A, B, C, E);
    }
}

/// Random lag-ell output-noise model with contracting companion dynamics.
inline sfl::VarxModel random_varx(sfl::rng::Stream& s, int ell, int n_u, int n_y,
                                  double radius = 0.8) {
    MatrixXd A_hat(n_y, ell * n_y), B_hat(n_y, ell * n_u);
    for (int i = 0; i < n_y; ++i) {
        for (int j = 0; j < ell * n_y; ++j) A_hat(i, j) = s.uniform(-1, 1);
        for (int j = 0; j < ell * n_u; ++j) B_hat(i, j) = s.uniform(-1, 1);
    }
    sfl::VarxModel m(A_hat, B_hat, ell);
    MatrixXd F, G, H;
    companion(m, F, G, H);
    const double rho = F.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > radius) m.A_hat *= radius / rho; // shrink the output couplings
    return sfl::VarxModel(m.A_hat, m.B_hat, ell);
}

/// Undisturbed record of an unstable model under u = K z + r, with an LQR
/// gain on the true companion form and seeded uniform(-1,1) references, so
/// the record stays well scaled; length T including the leading zero window.
inline sfl::RealTrajectory excite_stabilized(const sfl::VarxModel& m, int T,
                                             sfl::rng::Stream s,
                                             const MatrixXd& w_eff = MatrixXd()) {
    MatrixXd F, G;
    sfl::companion_form(m, F, G);
    const int nz = static_cast<int>(F.rows());
    const MatrixXd K =
        sfl::dlqr(F, G, MatrixXd::Identity(nz, nz), MatrixXd::Identity(m.n_u(), m.n_u()));
    const int ell = m.lag;
    sfl::RealTrajectory rec;
    rec.start_time = 1 - ell;
    rec.u = MatrixXd::Zero(m.n_u(), T);
    rec.y = MatrixXd::Zero(m.n_y(), T);
    for (int k = ell; k < T; ++k) {
        VectorXd r(m.n_u());
        for (int c = 0; c < m.n_u(); ++c) r(c) = s.uniform(-1, 1);
        rec.u.col(k) = K * sfl::stack_window(rec.u.middleCols(k - ell, ell),
                                             rec.y.middleCols(k - ell, ell)) +
                       r;
        rec.y.col(k) = m.A_hat * Eigen::Map<const VectorXd>(
                                     rec.y.middleCols(k - ell, ell).data(), ell * m.n_y()) +
                       m.B_hat * Eigen::Map<const VectorXd>(
                                     rec.u.middleCols(k - ell, ell).data(), ell * m.n_u());
        if (w_eff.size() > 0) rec.y.col(k) += w_eff.col(k - ell);
    }
    return rec;
}

/// Undisturbed record of the model under seeded uniform(-1,1) inputs from a
/// zero initial window; length T including the leading zero window.
inline sfl::RealTrajectory excite_undisturbed(const sfl::VarxModel& m, int T,
                                              sfl::rng::Stream s) {
    const int ell = m.lag;
    sfl::RealTrajectory init;
    init.start_time = 1 - ell;
    init.u = MatrixXd::Zero(m.n_u(), ell);
    init.y = MatrixXd::Zero(m.n_y(), ell);
    MatrixXd u_seq(m.n_u(), T - ell);
    for (int k = 0; k < T - ell; ++k)
        for (int c = 0; c < m.n_u(); ++c) u_seq(c, k) = s.uniform(-1, 1);
    return sfl::simulate_varx_output_noise(m, init, u_seq, MatrixXd::Zero(m.n_y(), T - ell));
}

} // namespace oracle
