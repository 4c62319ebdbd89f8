#include <doctest.h>

#include "oracles.hpp"
#include "sfl/aircraft.hpp"
#include "sfl/errors.hpp"
#include "sfl/hankel.hpp"

using namespace sfl;
using Eigen::MatrixXd;

TEST_CASE("scalar depth-2 block") {
    MatrixXd d(1, 4);
    d << 1, 2, 3, 4;
    const MatrixXd h = hankel(d, 2);
    MatrixXd ref(2, 3);
    ref << 1, 2, 3, 2, 3, 4;
    CHECK((h - ref).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("depth must fit the record") {
    MatrixXd d(1, 3);
    d << 1, 2, 3;
    CHECK_THROWS_AS(hankel(d, 4), TooShort);
}

TEST_CASE("excitation certificate agrees with a brute-force rank") {
    rng::Stream root(31);
    for (int trial = 0; trial < 50; ++trial) {
        rng::Stream s = root.substream(trial);
        const int n_u = 1 + static_cast<int>(s.uniform(0, 1.999));
        const int order = 2 + static_cast<int>(s.uniform(0, 2.999));
        const int T = order * n_u + order + 4;
        MatrixXd u(n_u, T);
        for (int k = 0; k < T; ++k)
            for (int c = 0; c < n_u; ++c) u(c, k) = s.uniform(-1, 1);
        const RankCertificate cert = is_persistently_exciting(u, order);
        const int ref = oracle::brute_rank(hankel(u, order));
        CHECK(cert.rank == ref);
        CHECK(cert.required == order * n_u);
        CHECK(cert.pass == (ref == order * n_u));
    }
}

TEST_CASE("constant input is not persistently exciting beyond order 1") {
    const MatrixXd u = MatrixXd::Ones(1, 20);
    CHECK(is_persistently_exciting(u, 1).pass);
    CHECK_FALSE(is_persistently_exciting(u, 2).pass);
}

TEST_CASE("structural non-zero counts for the flight example") {
    // n_u=1, n_y=3, n_w=3, ell=2, N=10, T=90 -> n_g=79, L=31
    const HankelDims dims{1, 3, 3, 2, 10, 31, 79};
    CHECK(count_nonzero_entries(CountScheme::disturbed_stack, dims) == 205716);
    const long long assembled = count_nonzero_entries(CountScheme::shortened_stages, dims);
    const long long full_past = count_nonzero_entries(CountScheme::shortened_stages, dims,
                                                      CountConvention::full_past);
    CHECK(full_past == 74892);
    // convention difference stays within 15% of the reference count
    CHECK(std::abs(static_cast<double>(assembled) / 74892.0 - 1.0) < 0.15);
}

TEST_CASE("count ratio approximates the closed-form comparison") {
    const HankelDims dims{1, 3, 3, 2, 10, 31, 79};
    const double ratio =
        static_cast<double>(count_nonzero_entries(CountScheme::shortened_stages, dims)) /
        static_cast<double>(count_nonzero_entries(CountScheme::disturbed_stack, dims));
    const double predicted = (1.0 + 3.0) / (2.0 * (1.0 + 2.0 * 3.0)); // (n_u+n_y)/(2(n_u+2n_y))
    CHECK(std::abs(ratio / predicted - 1.0) < 0.15);
}

TEST_CASE("cached Hankel blocks match direct construction") {
    rng::Stream s(4);
    const VarxModel m = oracle::random_varx(s, 2, 1, 2);
    const RealTrajectory t = oracle::excite_undisturbed(m, 30, rng::Stream(8));
    HankelSystem sys(t);
    const MatrixXd direct = hankel(t.u, 3);
    const MatrixXd cached = sys.block('u', t.start_time, t.end_time(), 3);
    CHECK((direct - cached).cwiseAbs().maxCoeff() == 0.0);
}
