#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sfl/errors.hpp"
#include "sfl/lti.hpp"

namespace sfl {

enum class DistKind { uniform, gaussian, generic };

/// One independent disturbance component with finite variance.
struct ComponentDist {
    DistKind kind = DistKind::uniform;
    double a = 0.0, b = 0.0;      // uniform(a, b)
    double mu = 0.0, sigma2 = 0.0; // gaussian(mu, sigma2)
    // generic: mean plus a unit-free sampler mapping a (0,1) uniform to a centered draw
    double generic_mean = 0.0;
    std::function<double(double)> centered_sampler;
    double generic_std = 0.0;

    static ComponentDist uniform(double a, double b);
    static ComponentDist gaussian(double mu, double sigma2);
    static ComponentDist generic(double mean, double stddev, std::function<double(double)> centered);

    double mean() const;
    double stddev() const;
    /// Standardized (zero-mean, unit-variance) germ draw from a (0,1) uniform.
    double standardized(double u01) const;
};

struct DisturbanceSpec {
    std::vector<ComponentDist> components;

    int n_w() const { return static_cast<int>(components.size()); }
    Eigen::VectorXd mean() const;
    Eigen::VectorXd stddevs() const;
};

/// Joint affine PCE basis over an i.i.d. disturbance sequence of length N:
/// phi^0 = 1 and one centered, variance-normalized germ per component per step,
/// so L_w = 1 + n_w and L = 1 + N (L_w - 1). All functions have unit norm.
/// An optional block of n_init extra orthonormal directions (disjoint from the
/// disturbance germs) supports uncertain initial conditions; it occupies
/// indices [L, L + n_init).
struct JointBasis {
    int N = 0;
    int L_w = 0;
    int n_init = 0;

    JointBasis() = default;
    JointBasis(int horizon, int per_step_size, int init_block = 0);

    int germ_count() const { return L_w - 1; } // per step
    int L() const { return 1 + N * (L_w - 1); }
    int size() const { return L() + n_init; } // total, including the init block

    /// First/last basis index tied to disturbance step k (the ik(k) range).
    int ik_lo(int k) const;
    int ik_hi(int k) const;
    /// Disturbance step a basis index belongs to; k_prime(0) = 0.
    int k_prime(int j) const;
    /// Within-step position I(j) = j - k_prime(j)(L_w - 1), in [1, L_w - 1].
    int within_index(int j) const;

    bool is_init_index(int j) const { return j >= L() && j < size(); }

    bool operator==(const JointBasis&) const = default;
};

JointBasis build_joint_basis(const DisturbanceSpec& spec, int N);

/// PCE coefficient array for a named signal: coefficient j of the signal at
/// time k lives in coef(k).col(j), an (dim x basis.size()) matrix per step.
struct PceTrajectory {
    std::string name;  // "u", "y" or "w"
    int start_time = 0;
    JointBasis basis;
    std::vector<Eigen::MatrixXd> coefs; // one dim x basis.size() block per time step

    PceTrajectory() = default;
    PceTrajectory(std::string name, int start, JointBasis basis, int dim, int length);

    int length() const { return static_cast<int>(coefs.size()); }
    int end_time() const { return start_time + length() - 1; }
    int dim() const { return coefs.empty() ? 0 : static_cast<int>(coefs.front().rows()); }

    Eigen::MatrixXd& at(int t);
    const Eigen::MatrixXd& at(int t) const;
};

/// PCE coefficients of the disturbance W_k in the joint basis: mean at j = 0,
/// the per-step affine pattern on ik(k), zero elsewhere. Returns n_w x basis.size().
Eigen::MatrixXd disturbance_coeffs(const JointBasis& basis, const DisturbanceSpec& spec, int k);

Eigen::VectorXd mean(const PceTrajectory& traj, int t);
Eigen::VectorXd variance(const PceTrajectory& traj, int t);

/// E[Y' Q Y + U' R U] at time t; orthonormal basis, so it is a plain coefficient sum.
double second_moment_quadratic(const PceTrajectory& traj_y, const PceTrajectory& traj_u,
                               const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int t);

/// Basis function values phi^j for one Monte-Carlo draw (keyed by seed and sample
/// index; germ (k, c) uses the key (seed, k, c, sample)). Init-block entries are
/// filled from independent standard-normal germs.
Eigen::VectorXd sample_basis_values(const JointBasis& basis, const DisturbanceSpec& spec,
                                    std::uint64_t seed, std::uint64_t sample);

/// Evaluate a set of coefficient trajectories on shared germ draws. All
/// trajectories must reference the same basis. Element [s][i] is the
/// dim x length realization matrix of trajectory i under sample s.
std::vector<std::vector<Eigen::MatrixXd>>
sample_realizations(const std::vector<const PceTrajectory*>& trajs, const DisturbanceSpec& spec,
                    int n_samples, std::uint64_t seed);

struct HistogramBin {
    double left, right, density;
};

/// Equal-width density histogram; used for PDF exports.
std::vector<HistogramBin> histogram(const Eigen::VectorXd& values, int n_bins);

} // namespace sfl
