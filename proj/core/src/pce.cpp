#include "sfl/pce.hpp"

#include <cmath>

#include "sfl/rng.hpp"

namespace sfl {

ComponentDist ComponentDist::uniform(double a, double b) {
    if (!(b > a)) throw UnsupportedDistribution("uniform requires b > a");
    ComponentDist d;
    d.kind = DistKind::uniform;
    d.a = a;
    d.b = b;
    return d;
}

ComponentDist ComponentDist::gaussian(double mu, double sigma2) {
    if (!(sigma2 > 0)) throw UnsupportedDistribution("gaussian requires sigma2 > 0");
    ComponentDist d;
    d.kind = DistKind::gaussian;
    d.mu = mu;
    d.sigma2 = sigma2;
    return d;
}

ComponentDist ComponentDist::generic(double mean, double stddev,
                                     std::function<double(double)> centered) {
    if (!(stddev > 0) || !std::isfinite(stddev))
        throw UnsupportedDistribution("generic component needs a finite positive stddev");
    ComponentDist d;
    d.kind = DistKind::generic;
    d.generic_mean = mean;
    d.generic_std = stddev;
    d.centered_sampler = std::move(centered);
    return d;
}

double ComponentDist::mean() const {
    switch (kind) {
    case DistKind::uniform: return 0.5 * (a + b);
    case DistKind::gaussian: return mu;
    case DistKind::generic: return generic_mean;
    }
    return 0.0;
}

double ComponentDist::stddev() const {
    switch (kind) {
    case DistKind::uniform: return (b - a) / std::sqrt(12.0);
    case DistKind::gaussian: return std::sqrt(sigma2);
    case DistKind::generic: return generic_std;
    }
    return 0.0;
}

double ComponentDist::standardized(double u01) const {
    switch (kind) {
    case DistKind::uniform: return (u01 - 0.5) * std::sqrt(12.0);
    case DistKind::gaussian: return rng::norminv(u01);
    case DistKind::generic: return centered_sampler(u01) / generic_std;
    }
    return 0.0;
}

Eigen::VectorXd DisturbanceSpec::mean() const {
    Eigen::VectorXd m(n_w());
    for (int i = 0; i < n_w(); ++i) m(i) = components[static_cast<size_t>(i)].mean();
    return m;
}

Eigen::VectorXd DisturbanceSpec::stddevs() const {
    Eigen::VectorXd s(n_w());
    for (int i = 0; i < n_w(); ++i) s(i) = components[static_cast<size_t>(i)].stddev();
    return s;
}

JointBasis::JointBasis(int horizon, int per_step_size, int init_block)
    : N(horizon), L_w(per_step_size), n_init(init_block) {
    if (N < 1 || L_w < 2 || n_init < 0) throw IndexOutOfRange("invalid basis dimensions");
}

int JointBasis::ik_lo(int k) const {
    if (k < 0 || k >= N) throw IndexOutOfRange("disturbance step out of range");
    return 1 + k * (L_w - 1);
}

int JointBasis::ik_hi(int k) const {
    if (k < 0 || k >= N) throw IndexOutOfRange("disturbance step out of range");
    return (k + 1) * (L_w - 1);
}

int JointBasis::k_prime(int j) const {
    if (j < 0 || j >= L()) throw IndexOutOfRange("basis index out of range");
    if (j == 0) return 0;
    return (j - 1) / (L_w - 1);
}

int JointBasis::within_index(int j) const {
    if (j < 1 || j >= L()) throw IndexOutOfRange("basis index out of range");
    return j - k_prime(j) * (L_w - 1);
}

JointBasis build_joint_basis(const DisturbanceSpec& spec, int N) {
    if (N < 1) throw IndexOutOfRange("horizon must be at least 1");
    if (spec.n_w() < 1) throw UnsupportedDistribution("empty disturbance spec");
    for (const auto& c : spec.components)
        if (!(c.stddev() > 0) || !std::isfinite(c.stddev()))
            throw UnsupportedDistribution("component with undefined variance");
    return JointBasis(N, 1 + spec.n_w());
}

PceTrajectory::PceTrajectory(std::string nm, int start, JointBasis b, int dim, int length)
    : name(std::move(nm)), start_time(start), basis(b),
      coefs(static_cast<size_t>(length), Eigen::MatrixXd::Zero(dim, b.size())) {}

Eigen::MatrixXd& PceTrajectory::at(int t) {
    if (t < start_time || t > end_time()) throw IndexOutOfRange("time outside trajectory");
    return coefs[static_cast<size_t>(t - start_time)];
}

const Eigen::MatrixXd& PceTrajectory::at(int t) const {
    if (t < start_time || t > end_time()) throw IndexOutOfRange("time outside trajectory");
    return coefs[static_cast<size_t>(t - start_time)];
}

Eigen::MatrixXd disturbance_coeffs(const JointBasis& basis, const DisturbanceSpec& spec, int k) {
    if (k < 0 || k >= basis.N) throw IndexOutOfRange("disturbance step out of range");
    if (spec.n_w() != basis.germ_count()) throw BasisMismatch("spec does not match basis layout");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(spec.n_w(), basis.size());
    c.col(0) = spec.mean();
    const Eigen::VectorXd sd = spec.stddevs();
    for (int i = 0; i < spec.n_w(); ++i) c(i, basis.ik_lo(k) + i) = sd(i);
    return c;
}

Eigen::VectorXd mean(const PceTrajectory& traj, int t) { return traj.at(t).col(0); }

Eigen::VectorXd variance(const PceTrajectory& traj, int t) {
    const Eigen::MatrixXd& c = traj.at(t);
    return c.rightCols(c.cols() - 1).array().square().rowwise().sum();
}

double second_moment_quadratic(const PceTrajectory& traj_y, const PceTrajectory& traj_u,
                               const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int t) {
    const Eigen::MatrixXd& cy = traj_y.at(t);
    const Eigen::MatrixXd& cu = traj_u.at(t);
    if (Q.rows() != cy.rows() || R.rows() != cu.rows())
        throw DimensionMismatch("weight dimensions do not match coefficients");
    double v = 0.0;
    for (int j = 0; j < cy.cols(); ++j) v += cy.col(j).dot(Q * cy.col(j));
    for (int j = 0; j < cu.cols(); ++j) v += cu.col(j).dot(R * cu.col(j));
    return v;
}

Eigen::VectorXd sample_basis_values(const JointBasis& basis, const DisturbanceSpec& spec,
                                    std::uint64_t seed, std::uint64_t sample) {
    if (spec.n_w() != basis.germ_count()) throw BasisMismatch("spec does not match basis layout");
    Eigen::VectorXd phi(basis.size());
    phi(0) = 1.0;
    for (int k = 0; k < basis.N; ++k)
        for (int c = 0; c < basis.germ_count(); ++c) {
            const double u = rng::uniform01(rng::key(seed, static_cast<std::uint64_t>(k),
                                                     static_cast<std::uint64_t>(c), sample));
            phi(basis.ik_lo(k) + c) = spec.components[static_cast<size_t>(c)].standardized(u);
        }
    for (int m = 0; m < basis.n_init; ++m) {
        const double u = rng::uniform01(rng::key(seed, 0x696e6974ULL /*"init"*/,
                                                 static_cast<std::uint64_t>(m), sample));
        phi(basis.L() + m) = rng::norminv(u);
    }
    return phi;
}

std::vector<std::vector<Eigen::MatrixXd>>
sample_realizations(const std::vector<const PceTrajectory*>& trajs, const DisturbanceSpec& spec,
                    int n_samples, std::uint64_t seed) {
    if (trajs.empty()) return {};
    const JointBasis& basis = trajs.front()->basis;
    for (const auto* t : trajs)
        if (!(t->basis == basis)) throw BasisMismatch("trajectories use different bases");

    std::vector<std::vector<Eigen::MatrixXd>> out(static_cast<size_t>(n_samples));
    for (int s = 0; s < n_samples; ++s) {
        const Eigen::VectorXd phi =
            sample_basis_values(basis, spec, seed, static_cast<std::uint64_t>(s));
        auto& row = out[static_cast<size_t>(s)];
        row.reserve(trajs.size());
        for (const auto* t : trajs) {
            Eigen::MatrixXd r(t->dim(), t->length());
            for (int i = 0; i < t->length(); ++i) r.col(i) = t->coefs[static_cast<size_t>(i)] * phi;
            row.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<HistogramBin> histogram(const Eigen::VectorXd& values, int n_bins) {
    if (values.size() == 0 || n_bins < 1) return {};
    double lo = values.minCoeff(), hi = values.maxCoeff();
    if (hi <= lo) hi = lo + 1e-12;
    const double width = (hi - lo) / n_bins;
    std::vector<HistogramBin> bins(static_cast<size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b)
        bins[static_cast<size_t>(b)] = {lo + b * width, lo + (b + 1) * width, 0.0};
    for (int i = 0; i < values.size(); ++i) {
        int b = static_cast<int>((values(i) - lo) / width);
        b = std::min(std::max(b, 0), n_bins - 1);
        bins[static_cast<size_t>(b)].density += 1.0;
    }
    for (auto& b : bins) b.density /= static_cast<double>(values.size()) * width;
    return bins;
}

} // namespace sfl
