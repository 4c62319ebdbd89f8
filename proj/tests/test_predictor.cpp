#include <doctest.h>

#include "oracles.hpp"
#include "sfl/aircraft.hpp"
#include "sfl/errors.hpp"
#include "sfl/predictor.hpp"

using namespace sfl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

RealTrajectory random_window(const VarxModel& m, rng::Stream& s, double scale = 1.0) {
    RealTrajectory w;
    w.start_time = 1 - m.lag;
    w.u.resize(m.n_u(), m.lag);
    w.y.resize(m.n_y(), m.lag);
    for (int i = 0; i < m.lag; ++i) {
        for (int c = 0; c < m.n_u(); ++c) w.u(c, i) = scale * s.uniform(-1, 1);
        for (int c = 0; c < m.n_y(); ++c) w.y(c, i) = scale * s.uniform(-1, 1);
    }
    // make the window an actual model trajectory so the mean solve is feasible
    RealTrajectory seed;
    seed.start_time = w.start_time - m.lag;
    seed.u = MatrixXd::Zero(m.n_u(), m.lag);
    seed.y = w.y; // arbitrary seed window
    const RealTrajectory sim =
        simulate_varx_output_noise(m, seed, w.u, MatrixXd::Zero(m.n_y(), m.lag));
    w.y = sim.y.rightCols(m.lag);
    return w;
}

} // namespace

TEST_CASE("deterministic prediction equals direct simulation on random systems") {
    rng::Stream root(101);
    for (int trial = 0; trial < 30; ++trial) {
        rng::Stream s = root.substream(trial);
        const int ell = 1 + static_cast<int>(s.uniform(0, 2.999));
        const int n_u = 1 + static_cast<int>(s.uniform(0, 1.999));
        const int n_y = 1 + static_cast<int>(s.uniform(0, 2.999));
        const int N = 3 + static_cast<int>(s.uniform(0, 7.999));
        const VarxModel m = oracle::random_varx(s, ell, n_u, n_y);
        const int T = 2 * (ell + N + 1) * (n_u + n_y) + 20;
        const RealTrajectory data = oracle::excite_undisturbed(m, T, s.substream("data"));
        UndisturbedPredictor pred(data, ell, N);

        RealTrajectory init = random_window(m, s);
        MatrixXd u_future(n_u, N);
        for (int k = 0; k < N; ++k)
            for (int c = 0; c < n_u; ++c) u_future(c, k) = s.uniform(-1, 1);

        const MatrixXd y_pred = pred.predict(init, u_future);
        const RealTrajectory sim =
            simulate_varx_output_noise(m, init, u_future, MatrixXd::Zero(n_y, N));
        const double scale = 1.0 + sim.y.cwiseAbs().maxCoeff();
        CHECK((y_pred - sim.y.rightCols(N)).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
}

TEST_CASE("full propagation matches the direct coefficient recursion") {
    rng::Stream root(202);
    for (int trial = 0; trial < 20; ++trial) {
        rng::Stream s = root.substream(trial);
        const int ell = 1 + static_cast<int>(s.uniform(0, 1.999));
        const int n_y = 1 + static_cast<int>(s.uniform(0, 2.999));
        const int N = 3 + static_cast<int>(s.uniform(0, 4.999));
        const VarxModel m = oracle::random_varx(s, ell, 1, n_y);
        DisturbanceSpec spec;
        for (int c = 0; c < n_y; ++c)
            spec.components.push_back(ComponentDist::uniform(-0.2 - 0.1 * c, 0.3));
        const JointBasis basis = build_joint_basis(spec, N);

        const int T = 2 * (ell + N + 1) * (1 + n_y) + 20;
        const RealTrajectory data = oracle::excite_undisturbed(m, T, s.substream("data"));
        UndisturbedPredictor pred(data, ell, N);

        const RealTrajectory init = random_window(m, s);
        PceTrajectory u("u", 1, basis, 1, N);
        for (int k = 1; k <= N; ++k) {
            u.at(k).col(0).setConstant(s.uniform(-1, 1));
            for (int j = 1; j < basis.size(); ++j)
                if (k > basis.k_prime(j)) u.at(k)(0, j) = s.uniform(-1, 1);
        }

        const Prediction pr = pred.propagate_all(basis, spec, init, u);
        const auto ref = oracle::pce_recursion(m, basis, spec, init, u);
        double scale = 1.0;
        for (const auto& r : ref) scale = std::max(scale, r.cwiseAbs().maxCoeff());
        for (int k = 1; k <= N; ++k)
            CHECK((pr.y.at(k) - ref[k - 1]).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
}

TEST_CASE("causality zeros, initial pins and disturbance pattern hold exactly") {
    const VarxModel m = aircraft_varx();
    const DisturbanceSpec spec = aircraft_uniform_disturbance();
    const int N = 6;
    const JointBasis basis = build_joint_basis(spec, N);
    rng::Stream s(5);
    const RealTrajectory data = oracle::excite_stabilized(m, 90, s.substream("data"));
    UndisturbedPredictor pred(data, m.lag, N);
    const RealTrajectory init = random_window(m, s);
    PceTrajectory u("u", 1, basis, 1, N);
    for (int k = 1; k <= N; ++k) {
        u.at(k).col(0).setConstant(s.uniform(-1, 1));
        for (int j = 1; j < basis.size(); ++j)
            if (k > basis.k_prime(j)) u.at(k)(0, j) = s.uniform(-1, 1);
    }
    const Prediction pr = pred.propagate_all(basis, spec, init, u);
    for (int j = 1; j < basis.size(); ++j) {
        const int kp = basis.k_prime(j);
        for (int k = 1; k <= kp && k <= N; ++k) {
            CHECK(pr.y.at(k).col(j).cwiseAbs().maxCoeff() == 0.0);
            CHECK(pr.u.at(k).col(j).cwiseAbs().maxCoeff() == 0.0);
        }
        if (kp + 1 <= N) {
            const VectorXd expected = disturbance_coeffs(basis, spec, kp).col(j);
            CHECK((pr.y.at(kp + 1).col(j) - expected).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("inputs violating causality are rejected") {
    const VarxModel m = aircraft_varx();
    const DisturbanceSpec spec = aircraft_uniform_disturbance();
    const int N = 4;
    const JointBasis basis = build_joint_basis(spec, N);
    rng::Stream s(6);
    const RealTrajectory data = oracle::excite_stabilized(m, 80, s.substream("data"));
    UndisturbedPredictor pred(data, m.lag, N);
    const RealTrajectory init = random_window(m, s);
    PceTrajectory u("u", 1, basis, 1, N);
    const int j = basis.ik_lo(2); // tied to disturbance step 2
    u.at(1)(0, j) = 1.0;          // non-zero before the disturbance acts
    CHECK_THROWS_AS(pred.propagate_all(basis, spec, init, u), CausalityViolation);
}

TEST_CASE("disturbed-data prediction agrees with the undisturbed one") {
    const VarxModel m = aircraft_varx();
    const DisturbanceSpec spec = aircraft_uniform_disturbance();
    const int N = 5, ell = m.lag;
    const JointBasis basis = build_joint_basis(spec, N);
    rng::Stream s(44);

    const RealTrajectory ud = oracle::excite_stabilized(m, 90, s.substream("ud"));
    // disturbed record with logged w
    RealTrajectory init0;
    init0.start_time = 1 - ell;
    init0.u = MatrixXd::Zero(1, ell);
    init0.y = MatrixXd::Zero(3, ell);
    const int steps = 88;
    MatrixXd u_seq(1, steps), w_eff(3, steps);
    rng::Stream sd = s.substream("d");
    for (int k = 0; k < steps; ++k) {
        u_seq(0, k) = sd.uniform(-1, 1);
        for (int c = 0; c < 3; ++c) {
            const auto& comp = spec.components[c];
            w_eff(c, k) = comp.mean() + comp.stddev() * comp.standardized(
                                            rng::uniform01(rng::key(77, k, c)));
        }
    }
    RealTrajectory d = simulate_varx_output_noise(m, init0, u_seq, w_eff);
    // store w aligned with the record: w at time t drives y_{t+1}
    MatrixXd w_full = MatrixXd::Zero(3, d.length());
    w_full.middleCols(ell - 1, steps) = w_eff;
    d.w = w_full;

    UndisturbedPredictor up(ud, ell, N);
    DisturbedPredictor dp(d, ell, N);

    RealTrajectory win = random_window(m, s);
    win.w = MatrixXd::Zero(3, ell); // no pre-run disturbances in this test
    PceTrajectory u("u", 1, basis, 1, N);
    for (int k = 1; k <= N; ++k) {
        u.at(k).col(0).setConstant(s.uniform(-1, 1));
        for (int j = 1; j < basis.size(); ++j)
            if (k > basis.k_prime(j)) u.at(k)(0, j) = s.uniform(-1, 1);
    }
    const Prediction a = up.propagate_all(basis, spec, win, u);
    const Prediction b = dp.predict(basis, spec, win, u);
    double scale = 1.0, err = 0.0;
    for (int k = 1; k <= N; ++k) {
        scale = std::max(scale, a.y.at(k).cwiseAbs().maxCoeff());
        err = std::max(err, (a.y.at(k) - b.y.at(k)).cwiseAbs().maxCoeff());
    }
    CHECK(err / scale < 1e-6);
}

TEST_CASE("sampled coefficient trajectories match Monte-Carlo simulation") {
    const VarxModel m = aircraft_varx();
    const DisturbanceSpec spec = aircraft_uniform_disturbance();
    const int N = 6, ell = m.lag;
    const JointBasis basis = build_joint_basis(spec, N);
    rng::Stream s(808);
    const RealTrajectory data = oracle::excite_stabilized(m, 90, s.substream("data"));
    UndisturbedPredictor pred(data, ell, N);
    const RealTrajectory init = random_window(m, s);
    PceTrajectory u("u", 1, basis, 1, N);
    for (int k = 1; k <= N; ++k) u.at(k).col(0).setConstant(s.uniform(-1, 1));
    const Prediction pr = pred.propagate_all(basis, spec, init, u);

    // shared germ draws evaluate (u, y, w) consistently
    PceTrajectory w("w", 0, basis, 3, N);
    for (int k = 0; k < N; ++k) w.at(k) = disturbance_coeffs(basis, spec, k);
    const auto samples = sample_realizations({&pr.u, &pr.y, &w}, spec, 25, 999);
    for (const auto& sample : samples) {
        const MatrixXd& ur = sample[0];
        const MatrixXd& yr = sample[1];
        const MatrixXd& wr = sample[2];
        const RealTrajectory sim = simulate_varx_output_noise(m, init, ur, wr);
        const double scale = 1.0 + sim.y.cwiseAbs().maxCoeff();
        CHECK((yr - sim.y.rightCols(N)).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
}

TEST_CASE("uncertain initial window propagates through the init block") {
    const VarxModel m = aircraft_varx();
    const DisturbanceSpec spec = aircraft_uniform_disturbance();
    const int N = 5, ell = m.lag, n_init = 2;
    const JointBasis basis(N, 4, n_init);
    rng::Stream s(606);
    const RealTrajectory data = oracle::excite_stabilized(m, 90, s.substream("data"));
    UndisturbedPredictor pred(data, ell, N);

    // mean output window from a zero-input trajectory (the coefficient-space
    // window carries outputs only; its input window defaults to zero)
    RealTrajectory seed;
    seed.start_time = 1 - 2 * ell;
    seed.u = MatrixXd::Zero(1, ell);
    seed.y.resize(3, ell);
    for (int i = 0; i < ell; ++i)
        for (int c = 0; c < 3; ++c) seed.y(c, i) = s.uniform(-1, 1);
    const RealTrajectory free_run =
        simulate_varx_output_noise(m, seed, MatrixXd::Zero(1, ell), MatrixXd::Zero(3, ell));
    const MatrixXd win_y = free_run.y.rightCols(ell);

    // a consistent uncertainty direction: another zero-input free-run window
    RealTrajectory seed2 = seed;
    for (int i = 0; i < ell; ++i)
        for (int c = 0; c < 3; ++c) seed2.y(c, i) = s.uniform(-1, 1);
    const RealTrajectory dir_run =
        simulate_varx_output_noise(m, seed2, MatrixXd::Zero(1, ell), MatrixXd::Zero(3, ell));
    const MatrixXd dir_y = dir_run.y.rightCols(ell);

    PceTrajectory init_io("y", 1 - ell, basis, 3, ell);
    for (int i = 0; i < ell; ++i) {
        init_io.coefs[i].setZero();
        init_io.coefs[i].col(0) = win_y.col(i);
        init_io.coefs[i].col(basis.L()) = dir_y.col(i);
    }
    PceTrajectory u("u", 1, basis, 1, N);
    for (int k = 1; k <= N; ++k) u.at(k).col(0).setConstant(s.uniform(-1, 1));
    const Prediction pr = pred.propagate_uncertain_init(basis, spec, init_io, u);

    // the init-block column must equal the autonomous response of the direction
    RealTrajectory dwin;
    dwin.start_time = 1 - ell;
    dwin.u = MatrixXd::Zero(1, ell);
    dwin.y = dir_y;
    const RealTrajectory dsim =
        simulate_varx_output_noise(m, dwin, MatrixXd::Zero(1, N), MatrixXd::Zero(3, N));
    const MatrixXd resp = dsim.y.rightCols(N);
    for (int k = 1; k <= N; ++k)
        CHECK((pr.y.at(k).col(basis.L()) - resp.col(k - 1)).cwiseAbs().maxCoeff() < 1e-6);
}
