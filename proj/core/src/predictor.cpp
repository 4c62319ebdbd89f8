#include "sfl/predictor.hpp"

#include <cmath>
#include <string>

#include "sfl/errors.hpp"
#include "sfl/linalg.hpp"

namespace sfl {

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, int rows) {
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, v.size() / rows);
}

void check_init_window(const RealTrajectory& init, int ell, int n_u, int n_y) {
    if (init.length() < ell)
        throw InitTooShort("initial window has " + std::to_string(init.length()) +
                           " steps, need " + std::to_string(ell));
    if (init.u.rows() != n_u || init.y.rows() != n_y)
        throw DimensionMismatch("initial window signal dimensions do not match the data");
}

} // namespace

// ---------------------------------------------------------------------------
// UndisturbedPredictor

UndisturbedPredictor::UndisturbedPredictor(RealTrajectory ud_data, int ell, int N,
                                           PredictorOptions opts)
    : data_(std::move(ud_data)), ell_(ell), N_(N), opts_(opts) {
    if (ell < 1 || N < 1) throw DimensionMismatch("window length and horizon must be positive");
    const int T = data_.length();
    n_g_ = T - ell_ - N_ + 1;
    if (n_g_ < 1)
        throw TooShort("data length " + std::to_string(T) + " cannot host depth " +
                       std::to_string(ell_ + N_) + " windows");

    pe_ = check_stacked_pe(data_.u, data_.y, ell_, N_, opts_.pe_rtol);
    if (!pe_.pass)
        throw NotPersistentlyExciting("recorded data fails the excitation rank check: rank " +
                                      std::to_string(pe_.rank) + " < " +
                                      std::to_string(pe_.required));

    full_ = make_stage(T, ell_, N_, false);
    if (N_ > 1) yw_ = make_stage(T - 1, ell_, N_ - 1, false);
    per_k_.reserve(N_);
    for (int kp = 0; kp < N_; ++kp)
        per_k_.push_back(make_stage(T - kp - 1, ell_ - 1, N_ - kp, true));
}

UndisturbedPredictor::Stage UndisturbedPredictor::make_stage(int data_len, int past, int horizon,
                                                             bool pin_first_output) const {
    const int n_u = static_cast<int>(data_.u.rows());
    const int n_y = static_cast<int>(data_.y.rows());
    const int depth = past + horizon;
    if (data_len - depth + 1 < 1)
        throw TooShort("data prefix too short for a depth-" + std::to_string(depth) + " window");

    const Eigen::MatrixXd hu = hankel(data_.u.leftCols(data_len), depth);
    const Eigen::MatrixXd hy = hankel(data_.y.leftCols(data_len), depth);

    const int pinned_y = past + (pin_first_output ? 1 : 0);
    Stage s;
    s.pin.resize(hu.rows() + pinned_y * n_y, hu.cols());
    s.pin.topRows(hu.rows()) = hu;
    s.pin.bottomRows(pinned_y * n_y) = hy.topRows(pinned_y * n_y);
    s.out = hy.bottomRows((depth - pinned_y) * n_y);
    s.pin_pinv = pseudo_inverse(s.pin, opts_.rank_rtol);
    s.rank = numerical_rank(s.pin, opts_.rank_rtol);
    s.solve_map = s.out * s.pin_pinv;
    return s;
}

Eigen::VectorXd UndisturbedPredictor::solve_stage(const Stage& s, const Eigen::VectorXd& rhs,
                                                  double* residual) const {
    const Eigen::VectorXd g = s.pin_pinv * rhs;
    const double r = (s.pin * g - rhs).norm();
    if (residual) *residual = r;
    if (r > opts_.pin_tol * (1.0 + rhs.norm()))
        throw InfeasibleInit("pinned rows cannot be matched by the recorded data (residual " +
                             std::to_string(r) + ")");
    return g;
}

Eigen::MatrixXd UndisturbedPredictor::predict(const RealTrajectory& init,
                                              const Eigen::MatrixXd& u_future,
                                              Eigen::VectorXd* g_out, double* residual) const {
    const int n_u = static_cast<int>(data_.u.rows());
    const int n_y = static_cast<int>(data_.y.rows());
    check_init_window(init, ell_, n_u, n_y);
    if (u_future.rows() != n_u || u_future.cols() != N_)
        throw DimensionMismatch("future input block must be " + std::to_string(n_u) + " x " +
                                std::to_string(N_));

    Eigen::VectorXd rhs(full_.pin.rows());
    rhs.head(ell_ * n_u) = flatten(init.u.rightCols(ell_));
    rhs.segment(ell_ * n_u, N_ * n_u) = flatten(u_future);
    rhs.tail(ell_ * n_y) = flatten(init.y.rightCols(ell_));

    const Eigen::VectorXd g = solve_stage(full_, rhs, residual);
    if (g_out) *g_out = g;
    return unflatten(full_.out * g, n_y);
}

Eigen::MatrixXd UndisturbedPredictor::precompute_yw(const Eigen::VectorXd& mean_w) const {
    const int n_u = static_cast<int>(data_.u.rows());
    const int n_y = static_cast<int>(data_.y.rows());
    if (mean_w.size() != n_y)
        throw DimensionMismatch("disturbance mean must match the output dimension");

    Eigen::MatrixXd yw = Eigen::MatrixXd::Zero(n_y, N_);
    yw.col(0) = mean_w;
    if (N_ == 1) return yw;

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(yw_.pin.rows());
    // autonomous continuation of the window (0, ..., 0, mean_w) under zero input
    rhs.tail(ell_ * n_y).tail(n_y) = mean_w;
    double resid = 0.0;
    const Eigen::VectorXd g = solve_stage(yw_, rhs, &resid);
    yw.rightCols(N_ - 1) = unflatten(yw_.out * g, n_y);
    return yw;
}

Eigen::MatrixXd UndisturbedPredictor::propagate_mean(const RealTrajectory& init,
                                                     const Eigen::MatrixXd& u0,
                                                     const Eigen::VectorXd& mean_w,
                                                     Eigen::VectorXd* g_out,
                                                     double* residual) const {
    Eigen::MatrixXd y = predict(init, u0, g_out, residual);
    const Eigen::MatrixXd yw = precompute_yw(mean_w);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(y.rows());
    for (int k = 0; k < N_; ++k) {
        acc += yw.col(k);
        y.col(k) += acc;
    }
    return y;
}

Eigen::MatrixXd UndisturbedPredictor::propagate_pce_j(int kprime, const Eigen::MatrixXd& u_j,
                                                      const Eigen::VectorXd& w_coeff,
                                                      Eigen::VectorXd* g_out,
                                                      double* residual) const {
    if (kprime < 0 || kprime >= N_) throw IndexOutOfRange("disturbance step out of range");
    const int n_u = static_cast<int>(data_.u.rows());
    const int n_y = static_cast<int>(data_.y.rows());
    const int nh = N_ - kprime;
    if (u_j.rows() != n_u || u_j.cols() != nh)
        throw DimensionMismatch("shortened input block must be " + std::to_string(n_u) + " x " +
                                std::to_string(nh));
    if (w_coeff.size() != n_y)
        throw DimensionMismatch("disturbance coefficient must match the output dimension");

    const Stage& s = per_k_[kprime];
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s.pin.rows());
    rhs.segment((ell_ - 1) * n_u, nh * n_u) = flatten(u_j);
    rhs.tail(n_y) = w_coeff;
    const Eigen::VectorXd g = solve_stage(s, rhs, residual);
    if (g_out) *g_out = g;

    Eigen::MatrixXd y(n_y, nh);
    y.col(0) = w_coeff;
    if (nh > 1) y.rightCols(nh - 1) = unflatten(s.out * g, n_y);
    return y;
}

namespace {

void check_causality(const JointBasis& basis, const PceTrajectory& u_coeffs, int N,
                     double tol = 0.0) {
    for (int j = 1; j < static_cast<int>(basis.size()); ++j) {
        if (basis.is_init_index(j)) continue;
        const int kp = basis.k_prime(j);
        for (int k = 1; k <= kp && k <= N; ++k) {
            const int step = k - u_coeffs.start_time;
            if (step < 0 || step >= static_cast<int>(u_coeffs.coefs.size())) continue;
            if (u_coeffs.coefs[step].col(j).lpNorm<Eigen::Infinity>() > tol)
                throw CausalityViolation("input coefficient of basis index " + std::to_string(j) +
                                         " is nonzero at step " + std::to_string(k) +
                                         ", before the disturbance it represents is observable");
        }
    }
}

} // namespace

Prediction UndisturbedPredictor::propagate_all(const JointBasis& basis,
                                               const DisturbanceSpec& spec,
                                               const RealTrajectory& init,
                                               const PceTrajectory& u_coeffs) const {
    const int n_u = static_cast<int>(data_.u.rows());
    const int n_y = static_cast<int>(data_.y.rows());
    if (basis.N != N_) throw BasisMismatch("basis horizon does not match the predictor horizon");
    if (static_cast<int>(u_coeffs.coefs.size()) < N_ ||
        u_coeffs.start_time + static_cast<int>(u_coeffs.coefs.size()) - 1 < N_)
        throw DimensionMismatch("input coefficients must cover the full horizon");
    check_causality(basis, u_coeffs, N_);

    const int L = static_cast<int>(basis.size());
    Prediction p;
    p.u = u_coeffs;
    p.y.name = "y";
    p.y.start_time = 1;
    p.y.basis = basis;
    p.y.coefs.assign(N_, Eigen::MatrixXd::Zero(n_y, L));
    p.g.resize(L);
    p.report.residuals.assign(L, 0.0);
    p.report.n_g = n_g_;

    auto u_col = [&](int k, int j) { return u_coeffs.coefs[k - u_coeffs.start_time].col(j); };

    // mean index
    Eigen::MatrixXd u0(n_u, N_);
    for (int k = 1; k <= N_; ++k) u0.col(k - 1) = u_col(k, 0);
    const Eigen::MatrixXd y0 =
        propagate_mean(init, u0, spec.mean(), &p.g[0], &p.report.residuals[0]);
    for (int k = 0; k < N_; ++k) p.y.coefs[k].col(0) = y0.col(k);

    for (int j = 1; j < L; ++j) {
        if (basis.is_init_index(j))
            throw BasisMismatch("basis carries initial-window directions; use the "
                                "uncertain-initial-window propagation instead");
        const int kp = basis.k_prime(j);
        const int nh = N_ - kp;
        Eigen::MatrixXd uj(n_u, nh);
        for (int k = kp + 1; k <= N_; ++k) uj.col(k - kp - 1) = u_col(k, j);
        const Eigen::VectorXd wj = disturbance_coeffs(basis, spec, kp).col(j);
        const Eigen::MatrixXd yj =
            propagate_pce_j(kp, uj, wj, &p.g[j], &p.report.residuals[j]);
        for (int k = kp + 1; k <= N_; ++k) p.y.coefs[k - 1].col(j) = yj.col(k - kp - 1);
    }
    return p;
}

Prediction UndisturbedPredictor::propagate_uncertain_init(const JointBasis& basis,
                                                          const DisturbanceSpec& spec,
                                                          const PceTrajectory& init_coeffs,
                                                          const PceTrajectory& u_coeffs) const {
    const int n_u = static_cast<int>(data_.u.rows());
    const int n_y = static_cast<int>(data_.y.rows());
    if (basis.N != N_) throw BasisMismatch("basis horizon does not match the predictor horizon");
    if (basis.n_init == 0)
        throw BasisMismatch("basis has no initial-window block");
    if (static_cast<int>(init_coeffs.coefs.size()) < ell_)
        throw InitTooShort("initial-window coefficients must cover the full window");
    check_causality(basis, u_coeffs, N_);

    const int L = static_cast<int>(basis.size());

    // initial input window: taken from u_coeffs when it reaches back, else zero
    auto u_init_col = [&](int t, int j) -> Eigen::VectorXd {
        const int step = t - u_coeffs.start_time;
        if (step >= 0 && step < static_cast<int>(u_coeffs.coefs.size()))
            return u_coeffs.coefs[step].col(j);
        return Eigen::VectorXd::Zero(n_u);
    };
    auto y_init_col = [&](int t, int j) {
        return init_coeffs.coefs[t - init_coeffs.start_time].col(j);
    };

    Prediction p;
    p.u = u_coeffs;
    p.y.name = "y";
    p.y.start_time = 1;
    p.y.basis = basis;
    p.y.coefs.assign(N_, Eigen::MatrixXd::Zero(n_y, L));
    p.g.resize(L);
    p.report.residuals.assign(L, 0.0);
    p.report.n_g = n_g_;

    const int t0 = init_coeffs.start_time + static_cast<int>(init_coeffs.coefs.size()) - 1;

    for (int j = 0; j < L; ++j) {
        if (j > 0 && !basis.is_init_index(j)) continue; // disturbance indices handled below
        RealTrajectory win;
        win.start_time = t0 - ell_ + 1;
        win.u.resize(n_u, ell_);
        win.y.resize(n_y, ell_);
        for (int t = win.start_time; t <= t0; ++t) {
            win.u.col(t - win.start_time) = u_init_col(t, j);
            win.y.col(t - win.start_time) = y_init_col(t, j);
        }
        Eigen::MatrixXd uf(n_u, N_);
        for (int k = 1; k <= N_; ++k) {
            const int step = k - u_coeffs.start_time;
            uf.col(k - 1) = (step >= 0 && step < static_cast<int>(u_coeffs.coefs.size()))
                                ? Eigen::VectorXd(u_coeffs.coefs[step].col(j))
                                : Eigen::VectorXd::Zero(n_u);
        }
        const Eigen::MatrixXd yj =
            (j == 0) ? propagate_mean(win, uf, spec.mean(), &p.g[j], &p.report.residuals[j])
                     : predict(win, uf, &p.g[j], &p.report.residuals[j]);
        for (int k = 0; k < N_; ++k) p.y.coefs[k].col(j) = yj.col(k);
    }

    for (int j = 1; j < L; ++j) {
        if (basis.is_init_index(j)) continue;
        const int kp = basis.k_prime(j);
        const int nh = N_ - kp;
        Eigen::MatrixXd uj(n_u, nh);
        for (int k = kp + 1; k <= N_; ++k) {
            const int step = k - u_coeffs.start_time;
            uj.col(k - kp - 1) = (step >= 0 && step < static_cast<int>(u_coeffs.coefs.size()))
                                     ? Eigen::VectorXd(u_coeffs.coefs[step].col(j))
                                     : Eigen::VectorXd::Zero(n_u);
        }
        const Eigen::VectorXd wj = disturbance_coeffs(basis, spec, kp).col(j);
        const Eigen::MatrixXd yj =
            propagate_pce_j(kp, uj, wj, &p.g[j], &p.report.residuals[j]);
        for (int k = kp + 1; k <= N_; ++k) p.y.coefs[k - 1].col(j) = yj.col(k - kp - 1);
    }
    return p;
}

AffineMap UndisturbedPredictor::mean_map(const RealTrajectory& init,
                                         const Eigen::VectorXd& mean_w) const {
    const int n_u = static_cast<int>(data_.u.rows());
    const int n_y = static_cast<int>(data_.y.rows());
    check_init_window(init, ell_, n_u, n_y);

    Eigen::VectorXd rhs0 = Eigen::VectorXd::Zero(full_.pin.rows());
    rhs0.head(ell_ * n_u) = flatten(init.u.rightCols(ell_));
    rhs0.tail(ell_ * n_y) = flatten(init.y.rightCols(ell_));

    AffineMap m;
    m.M = full_.solve_map.middleCols(ell_ * n_u, N_ * n_u);
    m.b = full_.solve_map * rhs0;

    const Eigen::MatrixXd yw = precompute_yw(mean_w);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_y);
    for (int k = 0; k < N_; ++k) {
        acc += yw.col(k);
        m.b.segment(k * n_y, n_y) += acc;
    }
    return m;
}

AffineMap UndisturbedPredictor::pce_map(int kprime, const Eigen::VectorXd& w_coeff) const {
    if (kprime < 0 || kprime >= N_) throw IndexOutOfRange("disturbance step out of range");
    const int n_u = static_cast<int>(data_.u.rows());
    const int nh = N_ - kprime;
    const Stage& s = per_k_[kprime];

    AffineMap m;
    m.M = s.solve_map.middleCols((ell_ - 1) * n_u, nh * n_u);
    m.b = s.solve_map.rightCols(w_coeff.size()) * w_coeff;
    return m;
}

// ---------------------------------------------------------------------------
// DisturbedPredictor

DisturbedPredictor::DisturbedPredictor(RealTrajectory d_data, int ell, int N,
                                       PredictorOptions opts)
    : data_(std::move(d_data)), ell_(ell), N_(N), opts_(opts) {
    if (!data_.w)
        throw DimensionMismatch("disturbed-data prediction needs recorded disturbances");
    nu_ = static_cast<int>(data_.u.rows());
    ny_ = static_cast<int>(data_.y.rows());
    nw_ = static_cast<int>(data_.w->rows());
    const int T = data_.length();
    const int depth = ell_ + N_;
    n_g_ = T - depth + 1;
    if (n_g_ < 1)
        throw TooShort("data length " + std::to_string(T) + " cannot host depth " +
                       std::to_string(depth) + " windows");

    // excitation of the exogenous signals (input and disturbance jointly)
    Eigen::MatrixXd uw(nu_ + nw_, T);
    uw.topRows(nu_) = data_.u;
    uw.bottomRows(nw_) = *data_.w;
    pe_ = is_persistently_exciting(uw, depth, opts_.pe_rtol);
    if (!pe_.pass)
        throw NotPersistentlyExciting("recorded exogenous signals fail the excitation rank check");

    const Eigen::MatrixXd hu = hankel(data_.u, depth);
    const Eigen::MatrixXd hy = hankel(data_.y, depth);
    const Eigen::MatrixXd hw = hankel(*data_.w, depth);

    pin_.resize(hu.rows() + ell_ * ny_ + hw.rows(), n_g_);
    pin_.topRows(hu.rows()) = hu;
    pin_.middleRows(hu.rows(), ell_ * ny_) = hy.topRows(ell_ * ny_);
    pin_.bottomRows(hw.rows()) = hw;
    out_ = hy.bottomRows(N_ * ny_);

    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(pin_);
        pin_rank_.singular_values = svd.singularValues();
        pin_rank_.rank = numerical_rank(pin_, opts_.rank_rtol);
        pin_rank_.required = static_cast<int>(pin_.rows());
        pin_rank_.pass = pin_rank_.rank == pin_rank_.required;
    }
    pin_pinv_ = pseudo_inverse(pin_, opts_.rank_rtol);
    solve_map_ = out_ * pin_pinv_;
}

int DisturbedPredictor::u_future_offset(int k) const {
    if (k < 1 || k > N_) throw IndexOutOfRange("future step out of range");
    return (ell_ + k - 1) * nu_;
}

Eigen::VectorXd DisturbedPredictor::fixed_rhs(const JointBasis& basis, const DisturbanceSpec& spec,
                                              const RealTrajectory& init, int j) const {
    check_init_window(init, ell_, nu_, ny_);
    if (j == 0 && (!init.w || init.w->cols() < ell_))
        throw InitTooShort("initial window must carry the realized disturbances");

    const int depth = ell_ + N_;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pin_.rows());
    if (j == 0) {
        rhs.head(ell_ * nu_) = flatten(init.u.rightCols(ell_));
        rhs.segment(depth * nu_, ell_ * ny_) = flatten(init.y.rightCols(ell_));
    }
    const int w0 = depth * nu_ + ell_ * ny_;
    for (int p = 0; p < depth; ++p) {
        const int t = p - ell_ + 1; // disturbance time of this block row
        Eigen::VectorXd wv = Eigen::VectorXd::Zero(nw_);
        if (t < 0) {
            if (j == 0) wv = init.w->rightCols(ell_).col(t + ell_ - 1);
        } else if (t < N_) {
            wv = disturbance_coeffs(basis, spec, t).col(j);
        } else {
            if (j == 0) wv = spec.mean();
        }
        rhs.segment(w0 + p * nw_, nw_) = wv;
    }
    return rhs;
}

AffineMap DisturbedPredictor::map_for(const Eigen::VectorXd& rhs_fixed) const {
    if (rhs_fixed.size() != pin_.rows())
        throw DimensionMismatch("fixed right-hand side has the wrong size");
    AffineMap m;
    m.M = solve_map_.middleCols(ell_ * nu_, N_ * nu_);
    m.b = solve_map_ * rhs_fixed;
    return m;
}

Prediction DisturbedPredictor::predict(const JointBasis& basis, const DisturbanceSpec& spec,
                                       const RealTrajectory& init,
                                       const PceTrajectory& u_coeffs) const {
    if (basis.N != N_) throw BasisMismatch("basis horizon does not match the predictor horizon");
    if (static_cast<int>(basis.size()) == 0) throw BasisMismatch("empty basis");
    check_causality(basis, u_coeffs, N_);

    const int L = static_cast<int>(basis.size());
    Prediction p;
    p.u = u_coeffs;
    p.y.name = "y";
    p.y.start_time = 1;
    p.y.basis = basis;
    p.y.coefs.assign(N_, Eigen::MatrixXd::Zero(ny_, L));
    p.g.resize(L);
    p.report.residuals.assign(L, 0.0);
    p.report.n_g = n_g_;

    for (int j = 0; j < L; ++j) {
        Eigen::VectorXd rhs = fixed_rhs(basis, spec, init, j);
        for (int k = 1; k <= N_; ++k) {
            const int step = k - u_coeffs.start_time;
            if (step >= 0 && step < static_cast<int>(u_coeffs.coefs.size()))
                rhs.segment(u_future_offset(k), nu_) = u_coeffs.coefs[step].col(j);
        }
        const Eigen::VectorXd g = pin_pinv_ * rhs;
        const double r = (pin_ * g - rhs).norm();
        p.report.residuals[j] = r;
        if (r > opts_.pin_tol * (1.0 + rhs.norm()))
            throw InfeasibleStack("pinned rows of basis index " + std::to_string(j) +
                                  " cannot be matched by the recorded data (residual " +
                                  std::to_string(r) + ")");
        p.g[j] = g;
        const Eigen::MatrixXd yj = unflatten(out_ * g, ny_);
        for (int k = 0; k < N_; ++k) p.y.coefs[k].col(j) = yj.col(k);
    }
    return p;
}

} // namespace sfl
