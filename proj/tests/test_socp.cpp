#include <doctest.h>

#include "oracles.hpp"
#include "sfl/socp.hpp"

using namespace sfl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("box-constrained quadratic hits the active bound") {
    // minimize (x - 3)^2 subject to x <= 1  ->  x* = 1
    MatrixXd P(1, 1);
    P << 2;
    VectorXd q(1);
    q << -6;
    MatrixXd G(1, 1);
    G << 1;
    VectorXd h(1);
    h << 1;
    ConeDims dims;
    dims.l = 1;
    const SocpResult r = solve_qp_socp(P, q, G, h, dims);
    REQUIRE(r.status == SolverStatus::optimal);
    CHECK(std::abs(r.x(0) - 1.0) < 1e-7);
    CHECK(std::abs(r.z(0) - 4.0) < 1e-6); // stationarity: 2x - 6 + z = 0
}

TEST_CASE("second-order cone projection has a closed form") {
    // minimize ||x - c||^2 subject to ||x_{2:3}|| <= x_1; c outside the cone.
    // For c = (0, 2, 0) the projection is (1, 1, 0).
    MatrixXd P = 2 * MatrixXd::Identity(3, 3);
    VectorXd q(3);
    q << 0, -4, 0;
    MatrixXd G = -MatrixXd::Identity(3, 3);
    VectorXd h = VectorXd::Zero(3);
    ConeDims dims;
    dims.q = {3};
    const SocpResult r = solve_qp_socp(P, q, G, h, dims);
    REQUIRE(r.status == SolverStatus::optimal);
    VectorXd expect(3);
    expect << 1, 1, 0;
    CHECK((r.x - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("infeasible orthant constraints are reported, not thrown") {
    // x <= -1 and -x <= -1 cannot both hold.
    MatrixXd P = MatrixXd::Identity(1, 1);
    VectorXd q = VectorXd::Zero(1);
    MatrixXd G(2, 1);
    G << 1, -1;
    VectorXd h(2);
    h << -1, -1;
    ConeDims dims;
    dims.l = 2;
    const SocpResult r = solve_qp_socp(P, q, G, h, dims);
    CHECK(r.status == SolverStatus::infeasible);
}

TEST_CASE("equality-constrained quadratic matches the dense KKT solve") {
    rng::Stream s(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4 + trial % 4, p = 2;
        MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = s.gaussian();
        const MatrixXd P = M.transpose() * M + MatrixXd::Identity(n, n);
        VectorXd q(n);
        for (int i = 0; i < n; ++i) q(i) = s.gaussian();
        MatrixXd A(p, n);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = s.gaussian();
        VectorXd b(p);
        for (int i = 0; i < p; ++i) b(i) = s.gaussian();
        // loose box so the inequality block exists but stays inactive
        MatrixXd G(2 * n, n);
        G << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
        VectorXd h = VectorXd::Constant(2 * n, 1e3);
        ConeDims dims;
        dims.l = 2 * n;
        const SocpResult r = solve_qp_socp(P, q, G, h, dims, {}, A, b);
        REQUIRE(r.status == SolverStatus::optimal);
        const VectorXd x_ref = oracle::kkt_qp(P, q, A, b);
        CHECK((r.x - x_ref).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("random mixed-cone problems satisfy the KKT conditions") {
    rng::Stream s(11);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 5 + trial % 5;
        MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = s.gaussian();
        const MatrixXd P = M.transpose() * M + 0.1 * MatrixXd::Identity(n, n);
        VectorXd q(n);
        for (int i = 0; i < n; ++i) q(i) = s.gaussian();

        ConeDims dims;
        dims.l = n;
        dims.q = {3, 4};
        const int m = dims.rows();
        MatrixXd G(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) G(i, j) = s.gaussian();
        // make x = 0 strictly feasible: orthant slack positive, cone radii dominant
        VectorXd h(m);
        for (int i = 0; i < dims.l; ++i) h(i) = 1.0 + s.uniform(0, 1);
        int off = dims.l;
        for (int d : dims.q) {
            h(off) = 10.0;
            for (int i = 1; i < d; ++i) h(off + i) = s.uniform(-1, 1);
            off += d;
        }
        const SocpResult r = solve_qp_socp(P, q, G, h, dims);
        REQUIRE(r.status == SolverStatus::optimal);

        // stationarity, primal feasibility, complementarity
        const double stat = (P * r.x + q + G.transpose() * r.z).cwiseAbs().maxCoeff();
        const double pfeas = (G * r.x + r.s - h).cwiseAbs().maxCoeff();
        CHECK(stat < 1e-6);
        CHECK(pfeas < 1e-6);
        CHECK(std::abs(r.s.dot(r.z)) < 1e-6);
        // cone membership of the slack
        for (int i = 0; i < dims.l; ++i) CHECK(r.s(i) > -1e-9);
        off = dims.l;
        for (int d : dims.q) {
            CHECK(r.s(off) + 1e-9 >= r.s.segment(off + 1, d - 1).norm() - 1e-7);
            off += d;
        }
    }
}

TEST_CASE("repeated solves are bit-identical") {
    MatrixXd P = 2 * MatrixXd::Identity(2, 2);
    VectorXd q(2);
    q << -2, -4;
    MatrixXd G(2, 2);
    G << 1, 0, 0, 1;
    VectorXd h(2);
    h << 0.5, 0.5;
    ConeDims dims;
    dims.l = 2;
    const SocpResult a = solve_qp_socp(P, q, G, h, dims);
    const SocpResult b = solve_qp_socp(P, q, G, h, dims);
    REQUIRE(a.status == SolverStatus::optimal);
    CHECK(a.x == b.x);
    CHECK(a.gap == b.gap);
}
