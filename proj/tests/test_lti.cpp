#include <doctest.h>

#include "oracles.hpp"
#include "sfl/errors.hpp"
#include "sfl/lti.hpp"
#include "sfl/rng.hpp"

using namespace sfl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

StateSpaceModel double_integrator() {
    MatrixXd A(2, 2), B(2, 1), C(1, 2), E(2, 1);
    A << 1, 1, 0, 1;
    B << 0, 1;
    C << 1, 0;
    E << 0, 1;
    return StateSpaceModel(A, B, C, E);
}

} // namespace

TEST_CASE("lag of the double integrator is 2") {
    const StateSpaceModel m = double_integrator();
    CHECK(lag(m.A, m.C) == 2);
}

TEST_CASE("double-integrator I/O form has coefficients [-1, 2]") {
    const StateSpaceModel m = double_integrator();
    const VarxModel v = varx_from_state_space(m, 2);
    CHECK(v.A_hat(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(v.A_hat(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("unobservable pair is rejected") {
    MatrixXd A = MatrixXd::Identity(2, 2);
    MatrixXd C = MatrixXd::Zero(1, 2);
    CHECK_THROWS_AS(lag(A, C), NotObservable);
}

TEST_CASE("zero init, zero inputs, zero disturbances stay at zero") {
    rng::Stream s(11);
    const VarxModel m = oracle::random_varx(s, 2, 1, 2);
    RealTrajectory init;
    init.start_time = -1;
    init.u = MatrixXd::Zero(1, 2);
    init.y = MatrixXd::Zero(2, 2);
    const RealTrajectory t =
        simulate_varx_output_noise(m, init, MatrixXd::Zero(1, 5), MatrixXd::Zero(2, 5));
    CHECK(t.y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("state-space and converted I/O simulations agree on random systems") {
    rng::Stream root(2024);
    for (int trial = 0; trial < 100; ++trial) {
        rng::Stream s = root.substream(trial);
        const int n_x = 2 + static_cast<int>(s.uniform(0, 2.999));
        const int n_u = 1 + static_cast<int>(s.uniform(0, 1.999));
        const int n_y = 1 + static_cast<int>(s.uniform(0, 1.999));
        const StateSpaceModel ss = oracle::random_observable(s, n_x, n_u, n_y);
        const int ell = lag(ss.A, ss.C);
        const VarxModel v = varx_from_state_space(ss, ell);

        const int T = 6 * ell + 12;
        VectorXd x0(n_x);
        for (int i = 0; i < n_x; ++i) x0(i) = s.uniform(-1, 1);
        MatrixXd u(n_u, T), w(ss.n_w(), T);
        for (int k = 0; k < T; ++k) {
            for (int c = 0; c < n_u; ++c) u(c, k) = s.uniform(-1, 1);
            for (int c = 0; c < ss.n_w(); ++c) w(c, k) = s.uniform(-1, 1);
        }
        const RealTrajectory full = simulate_state_space(ss, x0, u, w, 0);

        const RealTrajectory init = full.slice(0, ell - 1);
        init.w.has_value(); // the slice carries the matching w columns
        RealTrajectory init_w = init;
        const RealTrajectory rest = simulate_varx(
            v, init_w, u.rightCols(T - ell),
            w.middleCols(0, T - 1)); // w_k drives y_{k+1}; aligned from the window start

        const double scale = 1.0 + full.y.cwiseAbs().maxCoeff();
        const double err =
            (rest.y.rightCols(T - ell) - full.y.rightCols(T - ell)).cwiseAbs().maxCoeff();
        CHECK(err / scale < 1e-9);
    }
}

TEST_CASE("slice respects absolute time indexing") {
    RealTrajectory t;
    t.start_time = -1;
    t.u = MatrixXd::Zero(1, 5);
    t.y.resize(1, 5);
    t.y << 10, 11, 12, 13, 14;
    const RealTrajectory s = t.slice(1, 3);
    CHECK(s.start_time == 1);
    CHECK(s.length() == 3);
    CHECK(s.y(0, 0) == 12);
    CHECK_THROWS_AS(t.slice(-2, 0), IndexOutOfRange);
}

TEST_CASE("repeat simulation is bit-identical") {
    rng::Stream s(7);
    const VarxModel m = oracle::random_varx(s, 2, 1, 2);
    const RealTrajectory a = oracle::excite_undisturbed(m, 40, rng::Stream(5));
    const RealTrajectory b = oracle::excite_undisturbed(m, 40, rng::Stream(5));
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
}
