#pragma once

#include <Eigen/Dense>

namespace sfl {

/// Numerical rank with a relative singular value cutoff.
inline int numerical_rank(const Eigen::MatrixXd& m, double rtol = 1e-10) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double cut = rtol * sv(0);
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++r;
    return r;
}

/// Moore-Penrose pseudo-inverse; singular values below rtol * sigma_max are dropped.
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rtol = 1e-10) {
    if (m.size() == 0) return m.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cut = sv.size() > 0 ? rtol * sv(0) : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Minimum-norm least-squares solution of A x = b.
inline Eigen::VectorXd lstsq_min_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                      double rtol = 1e-10) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cut = sv.size() > 0 ? rtol * sv(0) : 0.0;
    Eigen::VectorXd t = svd.matrixU().transpose() * b;
    for (int i = 0; i < sv.size(); ++i)
        t(i) = sv(i) > cut ? t(i) / sv(i) : 0.0;
    return svd.matrixV() * t;
}

} // namespace sfl
