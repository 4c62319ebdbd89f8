#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sfl {

/// Cone layout of the inequality slack: first `l` nonnegative-orthant rows,
/// then one second-order cone per entry of `q` (first row of each cone is the
/// radius, the remaining rows the vector part).
struct ConeDims {
    int l = 0;
    std::vector<int> q;

    int rows() const {
        int r = l;
        for (int d : q) r += d;
        return r;
    }
    int degree() const { return l + static_cast<int>(q.size()); }
};

enum class SolverStatus { optimal, infeasible, unbounded, max_iterations, numerical_breakdown };

const char* to_string(SolverStatus s);

struct SocpOptions {
    double abstol = 1e-9;   // absolute complementarity gap
    double reltol = 1e-9;   // relative gap
    double feastol = 1e-8;  // primal/dual residual
    int max_iters = 100;
    double step_frac = 0.99;
};

struct SocpResult {
    SolverStatus status = SolverStatus::numerical_breakdown;
    Eigen::VectorXd x, s, z, y;
    double pcost = 0, dcost = 0, gap = 0, relgap = 0, pres = 0, dres = 0;
    int iterations = 0;
};

/// Dense primal-dual interior-point solve of
///     minimize (1/2) x'Px + q'x
///     s.t.     Gx + s = h,  s in K (orthant and second-order cones),
///              Ax = b (optional; pass empty matrices to omit)
/// with Nesterov-Todd scaling and a Mehrotra correction step. Never throws on
/// solver outcomes; the status field carries them.
SocpResult solve_qp_socp(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                         const ConeDims& dims, const SocpOptions& opts = {},
                         const Eigen::MatrixXd& A = Eigen::MatrixXd(),
                         const Eigen::VectorXd& b = Eigen::VectorXd());

} // namespace sfl
