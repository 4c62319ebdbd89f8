#include "sfl/hankel.hpp"

#include <limits>

#include "sfl/linalg.hpp"

namespace sfl {

Eigen::MatrixXd hankel(const Eigen::MatrixXd& data, int depth) {
    const int dim = static_cast<int>(data.rows());
    const int T = static_cast<int>(data.cols());
    if (depth < 1) throw IndexOutOfRange("depth must be positive");
    if (T < depth) throw TooShort("data shorter than Hankel depth");
    const int cols = T - depth + 1;
    Eigen::MatrixXd h(depth * dim, cols);
    for (int i = 0; i < depth; ++i) h.middleRows(i * dim, dim) = data.middleCols(i, cols);
    return h;
}

double RankCertificate::condition_number() const {
    if (singular_values.size() == 0 || rank == 0) return std::numeric_limits<double>::infinity();
    const double smin = singular_values(rank - 1);
    return smin > 0 ? singular_values(0) / smin : std::numeric_limits<double>::infinity();
}

namespace {

RankCertificate certify(const Eigen::MatrixXd& m, int required, double rtol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    RankCertificate c;
    c.singular_values = svd.singularValues();
    const double cut = c.singular_values.size() > 0 ? rtol * c.singular_values(0) : 0.0;
    for (int i = 0; i < c.singular_values.size(); ++i)
        if (c.singular_values(i) > cut) ++c.rank;
    c.required = required;
    c.pass = c.rank >= required;
    return c;
}

} // namespace

RankCertificate is_persistently_exciting(const Eigen::MatrixXd& u, int order, double rtol) {
    if (order < 1) throw IndexOutOfRange("order must be positive");
    return certify(hankel(u, order), order * static_cast<int>(u.rows()), rtol);
}

RankCertificate check_stacked_pe(const Eigen::MatrixXd& u, const Eigen::MatrixXd& y, int ell,
                                    int N, double rtol) {
    if (ell < 1 || N < 1) throw IndexOutOfRange("ell and N must be positive");
    if (u.cols() != y.cols()) throw DimensionMismatch("u and y length mismatch");
    const int nu = static_cast<int>(u.rows()), ny = static_cast<int>(y.rows());
    const Eigen::MatrixXd hu = hankel(u, ell + N);
    const Eigen::MatrixXd hy = hankel(y, ell + N).topRows(ell * ny);
    Eigen::MatrixXd stack(hu.rows() + hy.rows(), hu.cols());
    stack << hu, hy;
    return certify(stack, (ell + N) * nu + ell * ny, rtol);
}

long long count_nonzero_entries(CountScheme scheme, const HankelDims& d,
                                CountConvention convention) {
    if (d.n_u < 1 || d.n_y < 1 || d.ell < 1 || d.N < 1 || d.L < 1 || d.n_g < 1)
        throw IndexOutOfRange("dims must be positive");
    if (scheme == CountScheme::disturbed_stack) {
        return static_cast<long long>(d.ell + d.N) * (d.n_u + d.n_y + d.n_w) * d.n_g * d.L;
    }
    // shortened_stages: one (l + N)(n_u + n_y)-row stack for j = 0 and one shortened stack
    // per j >= 1 with k' = k_prime(j); each stack has n_g columns.
    const int lw1 = (d.L - 1) / d.N; // L_w - 1
    const int past = convention == CountConvention::full_past ? d.ell : d.ell - 1;
    long long rows = static_cast<long long>(d.ell + d.N) * (d.n_u + d.n_y); // j = 0
    for (int kp = 0; kp < d.N; ++kp)
        rows += static_cast<long long>(lw1) * (past + d.N - kp) * (d.n_u + d.n_y);
    return rows * d.n_g;
}

HankelSystem::HankelSystem(RealTrajectory data) : data_(std::move(data)) {}

const Eigen::MatrixXd& HankelSystem::block(char signal, int first, int last, int depth) const {
    const auto key = std::make_tuple(signal, first, last, depth);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const RealTrajectory window = data_.slice(first, last);
    const Eigen::MatrixXd* src = nullptr;
    switch (signal) {
    case 'u': src = &window.u; break;
    case 'y': src = &window.y; break;
    case 'w':
        if (!window.w) throw DimensionMismatch("trajectory carries no disturbance data");
        src = &*window.w;
        break;
    default: throw IndexOutOfRange("unknown signal");
    }
    return cache_.emplace(key, hankel(*src, depth)).first->second;
}

} // namespace sfl
