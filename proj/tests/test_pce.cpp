#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sfl/aircraft.hpp"
#include "sfl/errors.hpp"
#include "sfl/pce.hpp"

using namespace sfl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("basis dimensions for three components and horizon 10") {
    const JointBasis b = build_joint_basis(aircraft_uniform_disturbance(), 10);
    CHECK(b.L_w == 4);
    CHECK(b.L() == 31);
    CHECK(b.size() == 31);
}

TEST_CASE("index bookkeeping identities") {
    const JointBasis b = build_joint_basis(aircraft_uniform_disturbance(), 10);
    for (int j = 1; j < b.L(); ++j) {
        const int k = b.k_prime(j);
        const int i = b.within_index(j);
        CHECK(i >= 1);
        CHECK(i <= b.L_w - 1);
        CHECK(j == k * (b.L_w - 1) + i);
        CHECK(j >= b.ik_lo(k));
        CHECK(j <= b.ik_hi(k));
    }
    CHECK(b.k_prime(0) == 0);
}

TEST_CASE("disturbance coefficients reproduce mean and per-step pattern") {
    const DisturbanceSpec spec = aircraft_uniform_disturbance();
    const JointBasis b = build_joint_basis(spec, 5);
    for (int k = 0; k < 5; ++k) {
        const MatrixXd wk = disturbance_coeffs(b, spec, k);
        CHECK((wk.col(0) - spec.mean()).cwiseAbs().maxCoeff() < 1e-14);
        // non-zero entries only on the indices tied to step k
        for (int j = 1; j < b.size(); ++j) {
            const double norm = wk.col(j).cwiseAbs().maxCoeff();
            if (b.k_prime(j) == k && !b.is_init_index(j))
                CHECK(norm > 0.0);
            else
                CHECK(norm == 0.0);
        }
    }
}

TEST_CASE("germ basis values are centered and unit-variance empirically") {
    const DisturbanceSpec spec = aircraft_uniform_disturbance();
    const JointBasis b = build_joint_basis(spec, 2);
    const int n = 200000;
    VectorXd s1 = VectorXd::Zero(b.size()), s2 = VectorXd::Zero(b.size());
    for (int i = 0; i < n; ++i) {
        const VectorXd phi = sample_basis_values(b, spec, 99, i);
        s1 += phi;
        s2 += phi.cwiseProduct(phi);
    }
    s1 /= n;
    s2 /= n;
    CHECK(std::abs(s1(0) - 1.0) < 1e-12); // constant function
    for (int j = 1; j < b.size(); ++j) {
        CHECK(std::abs(s1(j)) < 0.02);
        CHECK(std::abs(s2(j) - 1.0) < 0.02);
    }
}

TEST_CASE("affine reconstruction of the disturbance is exact per sample") {
    const DisturbanceSpec spec = aircraft_uniform_disturbance();
    const int N = 4;
    const JointBasis b = build_joint_basis(spec, N);
    PceTrajectory w("w", 0, b, spec.n_w(), N);
    for (int k = 0; k < N; ++k) w.at(k) = disturbance_coeffs(b, spec, k);

    const auto samples = sample_realizations({&w}, spec, 50, 7);
    for (const auto& sample : samples) {
        const MatrixXd& wr = sample[0];
        for (int k = 0; k < N; ++k)
            for (int c = 0; c < spec.n_w(); ++c) {
                const auto& comp = spec.components[c];
                CHECK(wr(c, k) >= comp.a - 1e-12);
                CHECK(wr(c, k) <= comp.b + 1e-12);
            }
    }
}

TEST_CASE("mean, variance and quadratic moment match direct sums") {
    const DisturbanceSpec spec = aircraft_uniform_disturbance();
    const JointBasis b = build_joint_basis(spec, 3);
    rng::Stream s(3);
    PceTrajectory y("y", 1, b, 2, 3), u("u", 1, b, 1, 3);
    for (int k = 0; k < 3; ++k) {
        y.coefs[k] = MatrixXd::Zero(2, b.size());
        u.coefs[k] = MatrixXd::Zero(1, b.size());
        for (int j = 0; j < b.size(); ++j) {
            for (int c = 0; c < 2; ++c) y.coefs[k](c, j) = s.uniform(-1, 1);
            u.coefs[k](0, j) = s.uniform(-1, 1);
        }
    }
    const VectorXd m = mean(y, 2);
    CHECK((m - y.at(2).col(0)).cwiseAbs().maxCoeff() == 0.0);
    const VectorXd v = variance(y, 2);
    VectorXd vref = VectorXd::Zero(2);
    for (int j = 1; j < b.size(); ++j) vref += y.at(2).col(j).cwiseProduct(y.at(2).col(j));
    CHECK((v - vref).cwiseAbs().maxCoeff() < 1e-14);

    const MatrixXd Q = MatrixXd::Identity(2, 2) * 2.0, R = MatrixXd::Identity(1, 1);
    double ref = 0;
    for (int j = 0; j < b.size(); ++j)
        ref += y.at(2).col(j).dot(Q * y.at(2).col(j)) + u.at(2).col(j).dot(R * u.at(2).col(j));
    CHECK(second_moment_quadratic(y, u, Q, R, 2) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("gaussian components use the normal germ") {
    DisturbanceSpec spec;
    spec.components = {ComponentDist::gaussian(1.0, 4.0)};
    CHECK(spec.components[0].mean() == 1.0);
    CHECK(spec.components[0].stddev() == 2.0);
    const JointBasis b = build_joint_basis(spec, 1);
    double s1 = 0, s2 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const VectorXd phi = sample_basis_values(b, spec, 5, i);
        s1 += phi(1);
        s2 += phi(1) * phi(1);
    }
    CHECK(std::abs(s1 / n) < 0.02);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("histogram integrates to one") {
    rng::Stream s(17);
    VectorXd v(5000);
    for (int i = 0; i < v.size(); ++i) v(i) = s.gaussian();
    const auto bins = histogram(v, 40);
    CHECK(bins.size() == 40);
    double mass = 0;
    for (const auto& b : bins) mass += b.density * (b.right - b.left);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}
