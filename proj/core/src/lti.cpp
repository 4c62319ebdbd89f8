#include "sfl/lti.hpp"

#include "sfl/linalg.hpp"

namespace sfl {

namespace {
constexpr double kPinvTol = 1e-10;
}

StateSpaceModel::StateSpaceModel(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c,
                                 Eigen::MatrixXd e)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), E(std::move(e)) {
    if (A.rows() != A.cols()) throw DimensionMismatch("A must be square");
    if (B.rows() != A.rows() || C.cols() != A.rows() || E.rows() != A.rows())
        throw DimensionMismatch("inconsistent state-space dimensions");
    if (A.rows() < 1 || B.cols() < 1 || C.rows() < 1 || E.cols() < 1)
        throw DimensionMismatch("all dimensions must be at least 1");
}

VarxModel::VarxModel(Eigen::MatrixXd a_hat, Eigen::MatrixXd b_hat, Eigen::MatrixXd e_hat, int l,
                     bool a2)
    : A_hat(std::move(a_hat)), B_hat(std::move(b_hat)), E_hat(std::move(e_hat)), lag(l),
      output_noise(a2) {
    if (lag < 1) throw DimensionMismatch("lag must be positive");
    const int ny = static_cast<int>(A_hat.rows());
    if (A_hat.cols() != static_cast<Eigen::Index>(lag) * ny)
        throw DimensionMismatch("A_hat columns must equal lag * n_y");
    if (B_hat.rows() != ny || B_hat.cols() % lag != 0)
        throw DimensionMismatch("B_hat columns must be a multiple of lag");
    if (E_hat.rows() != ny || E_hat.cols() % lag != 0)
        throw DimensionMismatch("E_hat columns must be a multiple of lag");
    if (output_noise) {
        const int nw = n_w();
        if (nw != ny) throw DimensionMismatch("output_noise requires n_w == n_y");
        Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(ny, lag * nw);
        expect.rightCols(nw) = Eigen::MatrixXd::Identity(ny, ny);
        if ((E_hat - expect).cwiseAbs().maxCoeff() > 1e-12)
            throw DimensionMismatch("output_noise set but E_hat != [0 ... 0 I]");
    }
}

VarxModel::VarxModel(Eigen::MatrixXd a_hat, Eigen::MatrixXd b_hat, int l)
    : VarxModel([&] {
          return a_hat;
      }(), std::move(b_hat),
      [&] {
          const int ny = static_cast<int>(a_hat.rows());
          Eigen::MatrixXd e = Eigen::MatrixXd::Zero(ny, l * ny);
          e.rightCols(ny) = Eigen::MatrixXd::Identity(ny, ny);
          return e;
      }(), l, true) {}

RealTrajectory::RealTrajectory(int start, Eigen::MatrixXd u_, Eigen::MatrixXd y_,
                               std::optional<Eigen::MatrixXd> w_)
    : start_time(start), u(std::move(u_)), y(std::move(y_)), w(std::move(w_)) {
    if (u.cols() != y.cols()) throw DimensionMismatch("u and y must cover the same window");
    if (w && w->cols() != u.cols()) throw DimensionMismatch("w must cover the same window");
}

RealTrajectory RealTrajectory::slice(int t0, int t1) const {
    if (t0 < start_time || t1 > end_time() || t1 < t0)
        throw IndexOutOfRange("slice window outside trajectory");
    const int o = t0 - start_time, n = t1 - t0 + 1;
    std::optional<Eigen::MatrixXd> ws;
    if (w) ws = w->middleCols(o, n);
    return RealTrajectory(t0, u.middleCols(o, n), y.middleCols(o, n), ws);
}

Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                     int depth) {
    const int ny = static_cast<int>(C.rows()), nx = static_cast<int>(A.cols());
    Eigen::MatrixXd obs(depth * ny, nx);
    Eigen::MatrixXd cak = C;
    for (int i = 0; i < depth; ++i) {
        obs.middleRows(i * ny, ny) = cak;
        cak = cak * A;
    }
    return obs;
}

int lag(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
    const int nx = static_cast<int>(A.rows());
    if (numerical_rank(observability_matrix(A, C, nx), kPinvTol) < nx)
        throw NotObservable("(A, C) is not observable");
    for (int l = 1; l <= nx; ++l)
        if (numerical_rank(observability_matrix(A, C, l), kPinvTol) == nx) return l;
    throw NotObservable("unreachable");
}

namespace {

// [A^{l-1} D, ..., A D, D]
Eigen::MatrixXd reversed_ctrb(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D, int l) {
    const int nx = static_cast<int>(A.rows()), nd = static_cast<int>(D.cols());
    Eigen::MatrixXd c(nx, l * nd);
    Eigen::MatrixXd akd = D;
    for (int i = l - 1; i >= 0; --i) {
        c.middleCols(i * nd, nd) = akd;
        akd = A * akd;
    }
    return c;
}

// Strictly lower block-Toeplitz impulse matrix: block (i, j) = C A^{i-j-1} D for i > j.
Eigen::MatrixXd impulse_toeplitz(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                 const Eigen::MatrixXd& D, int l) {
    const int ny = static_cast<int>(C.rows()), nd = static_cast<int>(D.cols());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(l * ny, l * nd);
    std::vector<Eigen::MatrixXd> markov; // C A^p D
    Eigen::MatrixXd apd = D;
    for (int p = 0; p < l - 1; ++p) {
        markov.push_back(C * apd);
        apd = A * apd;
    }
    for (int i = 1; i < l; ++i)
        for (int j = 0; j < i; ++j)
            m.block(i * ny, j * nd, ny, nd) = markov[static_cast<size_t>(i - j - 1)];
    return m;
}

} // namespace

VarxModel varx_from_state_space(const StateSpaceModel& m, int ell) {
    if (ell < lag(m.A, m.C)) throw NotObservable("ell below the system lag");
    const Eigen::MatrixXd obs = observability_matrix(m.A, m.C, ell);
    const Eigen::MatrixXd obs_pinv = pseudo_inverse(obs, kPinvTol);
    Eigen::MatrixXd al = Eigen::MatrixXd::Identity(m.n_x(), m.n_x());
    for (int i = 0; i < ell; ++i) al = al * m.A;

    const Eigen::MatrixXd a_hat = m.C * al * obs_pinv;
    const Eigen::MatrixXd b_hat =
        m.C * (reversed_ctrb(m.A, m.B, ell) - al * obs_pinv * impulse_toeplitz(m.A, m.C, m.B, ell));
    const Eigen::MatrixXd e_hat =
        m.C * (reversed_ctrb(m.A, m.E, ell) - al * obs_pinv * impulse_toeplitz(m.A, m.C, m.E, ell));

    // Detect the [0 ... 0 I] structure so output-noise-only operations can assert it.
    bool a2 = m.n_w() == m.n_y();
    if (a2) {
        Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(m.n_y(), ell * m.n_w());
        expect.rightCols(m.n_w()) = Eigen::MatrixXd::Identity(m.n_y(), m.n_y());
        a2 = (e_hat - expect).cwiseAbs().maxCoeff() <= 1e-9;
    }
    return VarxModel(a_hat, b_hat, e_hat, ell, a2);
}

RealTrajectory simulate_state_space(const StateSpaceModel& m, const Eigen::VectorXd& x0,
                                    const Eigen::MatrixXd& u_seq, const Eigen::MatrixXd& w_seq,
                                    int start_time) {
    if (u_seq.cols() != w_seq.cols()) throw DimensionMismatch("u and w length mismatch");
    if (x0.size() != m.n_x() || u_seq.rows() != m.n_u() || w_seq.rows() != m.n_w())
        throw DimensionMismatch("simulate_state_space: dimension mismatch");
    const int n = static_cast<int>(u_seq.cols());
    Eigen::MatrixXd y(m.n_y(), n);
    Eigen::VectorXd x = x0;
    for (int k = 0; k < n; ++k) {
        y.col(k) = m.C * x;
        x = m.A * x + m.B * u_seq.col(k) + m.E * w_seq.col(k);
    }
    return RealTrajectory(start_time, u_seq, y, w_seq);
}

RealTrajectory simulate_varx(const VarxModel& m, const RealTrajectory& init,
                             const Eigen::MatrixXd& u_seq, const Eigen::MatrixXd& w_seq) {
    const int l = m.lag, ny = m.n_y(), nu = m.n_u(), nw = m.n_w();
    if (init.length() != l) throw InitTooShort("initial window must have exactly lag steps");
    if (init.n_u() != nu || init.n_y() != ny) throw DimensionMismatch("init dimension mismatch");
    const int n = static_cast<int>(u_seq.cols());
    if (u_seq.rows() != nu) throw DimensionMismatch("u_seq rows");
    if (w_seq.rows() != nw || w_seq.cols() != l + n - 1)
        throw DimensionMismatch("w_seq must be n_w x (lag + N - 1)");

    Eigen::MatrixXd u(nu, l + n), y(ny, l + n), w = Eigen::MatrixXd::Zero(nw, l + n);
    u.leftCols(l) = init.u;
    u.rightCols(n) = u_seq;
    y.leftCols(l) = init.y;
    w.leftCols(l + n - 1) = w_seq;
    for (int k = l; k < l + n; ++k) {
        Eigen::VectorXd ywin(l * ny), uwin(l * nu), wwin(l * nw);
        for (int i = 0; i < l; ++i) {
            ywin.segment(i * ny, ny) = y.col(k - l + i);
            uwin.segment(i * nu, nu) = u.col(k - l + i);
            wwin.segment(i * nw, nw) = w.col(k - l + i);
        }
        y.col(k) = m.A_hat * ywin + m.B_hat * uwin + m.E_hat * wwin;
    }
    return RealTrajectory(init.start_time, u, y, w);
}

RealTrajectory simulate_varx_output_noise(const VarxModel& m, const RealTrajectory& init,
                                const Eigen::MatrixXd& u_seq, const Eigen::MatrixXd& w_eff) {
    if (!m.output_noise) throw DimensionMismatch("simulate_varx_output_noise requires an output-noise model");
    const int l = m.lag, n = static_cast<int>(u_seq.cols());
    if (w_eff.cols() != n) throw DimensionMismatch("w_eff must have one column per predicted step");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m.n_w(), l + n - 1);
    w.rightCols(n) = w_eff; // w_{k-1} sits one step before each predicted output
    return simulate_varx(m, init, u_seq, w);
}

} // namespace sfl
