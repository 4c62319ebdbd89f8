#include "sfl/ocp.hpp"

#include <cmath>
#include <string>

#include "sfl/errors.hpp"
#include "sfl/rng.hpp"

namespace sfl {

namespace {

// kron(I, Q) * M without forming the Kronecker product
Eigen::MatrixXd blockdiag_mul(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& M) {
    const int d = static_cast<int>(Q.rows());
    Eigen::MatrixXd r(M.rows(), M.cols());
    for (int i = 0; i < M.rows(); i += d) r.middleRows(i, d) = Q * M.middleRows(i, d);
    return r;
}

Eigen::VectorXd blockdiag_mul(const Eigen::MatrixXd& Q, const Eigen::VectorXd& v) {
    const int d = static_cast<int>(Q.rows());
    Eigen::VectorXd r(v.size());
    for (int i = 0; i < v.size(); i += d) r.segment(i, d) = Q * v.segment(i, d);
    return r;
}

void assemble(OcpProblem& p, const OcpBuildOptions& opts) {
    const int N = p.N, n_u = p.n_u, n_y = p.n_y;
    const int L = static_cast<int>(p.basis.size());

    // decision layout
    p.offset.assign(L, 0);
    p.n_dec = 0;
    for (int j = 0; j < L; ++j) {
        p.offset[j] = p.n_dec;
        p.n_dec += n_u * (N - p.u_first[j] + 1);
    }

    // quadratic objective, block-diagonal per basis index
    p.P = Eigen::MatrixXd::Zero(p.n_dec, p.n_dec);
    p.q = Eigen::VectorXd::Zero(p.n_dec);
    p.cost_const = 0.0;
    for (int j = 0; j < L; ++j) {
        const auto& m = p.maps[j];
        const int nu_j = n_u * (N - p.u_first[j] + 1);
        const Eigen::MatrixXd QM = blockdiag_mul(p.weights.Q, m.M);
        Eigen::MatrixXd Pj = 2.0 * (m.M.transpose() * QM);
        for (int i = 0; i < nu_j; i += n_u) Pj.block(i, i, n_u, n_u) += 2.0 * p.weights.R;
        if (opts.ridge > 0) Pj.diagonal().array() += 2.0 * opts.ridge;
        p.P.block(p.offset[j], p.offset[j], nu_j, nu_j) = Pj;
        p.q.segment(p.offset[j], nu_j) = 2.0 * QM.transpose() * m.b;
        p.cost_const += m.b.dot(blockdiag_mul(p.weights.Q, m.b));
    }

    // chance rows
    std::vector<Eigen::VectorXd> lin_rows; // orthant
    std::vector<double> lin_h;
    std::vector<Eigen::MatrixXd> soc_rows;
    std::vector<Eigen::VectorXd> soc_h;
    for (const ChanceRow& row : p.rows) {
        validate_chance_row(row, n_y);
        const int c = row.component;
        for (int k = 2; k <= N; ++k) {
            // mean part from the j = 0 map
            Eigen::VectorXd a0 = Eigen::VectorXd::Zero(p.n_dec);
            const int r0 = (k - p.y_first[0]) * n_y + c;
            a0.segment(p.offset[0], p.maps[0].M.cols()) = p.maps[0].M.row(r0);
            const double c0 = p.maps[0].b(r0);

            // fluctuation part: one entry per index active at step k
            std::vector<std::pair<Eigen::VectorXd, double>> dirs;
            for (int j = 1; j < L; ++j) {
                if (p.y_first[j] > k) continue;
                Eigen::VectorXd aj = Eigen::VectorXd::Zero(p.n_dec);
                const int rj = (k - p.y_first[j]) * n_y + c;
                aj.segment(p.offset[j], p.maps[j].M.cols()) = p.maps[j].M.row(rj);
                dirs.emplace_back(std::move(aj), p.maps[j].b(rj));
            }

            if (row.kappa <= 0.0 || dirs.empty()) {
                lin_rows.push_back(a0);
                lin_h.push_back(row.upper - c0);
                lin_rows.push_back(-a0);
                lin_h.push_back(c0 - row.lower);
                continue;
            }
            const int d = 1 + static_cast<int>(dirs.size());
            for (int side = 0; side < 2; ++side) {
                Eigen::MatrixXd Gc(d, p.n_dec);
                Eigen::VectorXd hc(d);
                if (side == 0) { // mean + kappa*std <= upper
                    Gc.row(0) = a0.transpose();
                    hc(0) = row.upper - c0;
                } else { // lower <= mean - kappa*std
                    Gc.row(0) = -a0.transpose();
                    hc(0) = c0 - row.lower;
                }
                for (size_t i = 0; i < dirs.size(); ++i) {
                    Gc.row(1 + static_cast<int>(i)) = -row.kappa * dirs[i].first.transpose();
                    hc(1 + static_cast<int>(i)) = row.kappa * dirs[i].second;
                }
                soc_rows.push_back(std::move(Gc));
                soc_h.push_back(std::move(hc));
            }
        }
    }

    p.dims.l = static_cast<int>(lin_rows.size());
    p.dims.q.clear();
    int m = p.dims.l;
    for (const auto& s : soc_rows) {
        p.dims.q.push_back(static_cast<int>(s.rows()));
        m += static_cast<int>(s.rows());
    }
    p.G.resize(m, p.n_dec);
    p.h.resize(m);
    for (int i = 0; i < p.dims.l; ++i) {
        p.G.row(i) = lin_rows[i].transpose();
        p.h(i) = lin_h[i];
    }
    int off = p.dims.l;
    for (size_t i = 0; i < soc_rows.size(); ++i) {
        p.G.middleRows(off, soc_rows[i].rows()) = soc_rows[i];
        p.h.segment(off, soc_h[i].size()) = soc_h[i];
        off += static_cast<int>(soc_rows[i].rows());
    }
}

} // namespace

const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::I: return "I";
        case Scheme::II: return "II";
        case Scheme::III: return "III";
    }
    return "?";
}

double chebyshev_kappa(double level) {
    if (level <= 0.0 || level >= 1.0)
        throw InvalidBounds("probability level must lie in (0,1)");
    return 1.0 / std::sqrt(1.0 - level);
}

void validate_chance_row(const ChanceRow& row, int n_y) {
    if (row.lower >= row.upper)
        throw InvalidBounds("chance-constraint interval is empty: [" +
                            std::to_string(row.lower) + ", " + std::to_string(row.upper) + "]");
    if (row.component < 0 || row.component >= n_y)
        throw IndexOutOfRange("chance-constraint component out of range");
    if (row.level <= 0.0 || row.level >= 1.0)
        throw InvalidBounds("probability level must lie in (0,1)");
    if (row.kappa < 0.0) throw InvalidBounds("backoff factor must be nonnegative");
}

OcpProblem build_ocp(const UndisturbedPredictor& pred, const JointBasis& basis,
                     const DisturbanceSpec& spec, const RealTrajectory& init,
                     const OcpWeights& weights, const std::vector<ChanceRow>& rows,
                     const OcpBuildOptions& opts) {
    const int N = pred.horizon();
    if (basis.N != N) throw BasisMismatch("basis horizon does not match the predictor");
    if (basis.n_init != 0)
        throw BasisMismatch("optimal control assumes a deterministic initial window");
    const int L = static_cast<int>(basis.size());

    OcpProblem p;
    p.N = N;
    p.n_u = init.n_u();
    p.n_y = init.n_y();
    p.basis = basis;
    p.spec = spec;
    p.weights = weights;
    p.rows = rows;
    p.u_first.assign(L, 1);
    p.y_first.assign(L, 1);
    p.maps.resize(L);

    p.maps[0] = pred.mean_map(init, spec.mean());
    for (int j = 1; j < L; ++j) {
        const int kp = basis.k_prime(j);
        p.u_first[j] = kp + 1;
        p.y_first[j] = kp + 1;
        const Eigen::VectorXd wj = disturbance_coeffs(basis, spec, kp).col(j);
        const AffineMap tail = pred.pce_map(kp, wj); // y over [kp+2, N]
        AffineMap full;
        full.M = Eigen::MatrixXd::Zero(tail.M.rows() + p.n_y, tail.M.cols());
        full.b = Eigen::VectorXd::Zero(tail.b.size() + p.n_y);
        full.b.head(p.n_y) = wj;         // y_{kp+1} is the pinned coefficient itself
        full.M.bottomRows(tail.M.rows()) = tail.M;
        full.b.tail(tail.b.size()) = tail.b;
        p.maps[j] = std::move(full);
    }
    assemble(p, opts);
    return p;
}

OcpProblem build_ocp(const DisturbedPredictor& pred, const JointBasis& basis,
                     const DisturbanceSpec& spec, const RealTrajectory& init,
                     const OcpWeights& weights, const std::vector<ChanceRow>& rows,
                     const OcpBuildOptions& opts) {
    if (basis.n_init != 0)
        throw BasisMismatch("optimal control assumes a deterministic initial window");
    const int L = static_cast<int>(basis.size());
    const int N = basis.N;

    OcpProblem p;
    p.N = N;
    p.n_u = init.n_u();
    p.n_y = init.n_y();
    p.basis = basis;
    p.spec = spec;
    p.weights = weights;
    p.rows = rows;
    p.u_first.assign(L, 1);
    p.y_first.assign(L, 1);
    p.maps.resize(L);

    for (int j = 0; j < L; ++j) {
        const int kp = (j == 0) ? 0 : basis.k_prime(j);
        const int u_first = (j == 0) ? 1 : kp + 1;
        p.u_first[j] = u_first;
        p.y_first[j] = u_first;
        const AffineMap full = pred.map_for(pred.fixed_rhs(basis, spec, init, j));
        AffineMap sliced;
        // keep only the decided inputs (causality zeros drop out of the map)
        sliced.M = full.M.block((u_first - 1) * p.n_y, (u_first - 1) * p.n_u,
                                (N - u_first + 1) * p.n_y, (N - u_first + 1) * p.n_u);
        sliced.b = full.b.tail((N - u_first + 1) * p.n_y);
        p.maps[j] = std::move(sliced);
    }
    assemble(p, opts);
    return p;
}

OcpProblem build_ocp(Scheme scheme, const RealTrajectory& data, int ell, int N,
                     const JointBasis& basis, const DisturbanceSpec& spec,
                     const RealTrajectory& init, const OcpWeights& weights,
                     const std::vector<ChanceRow>& rows, const OcpBuildOptions& opts) {
    if (scheme == Scheme::II) {
        DisturbedPredictor pred(data, ell, N, opts.predictor);
        return build_ocp(pred, basis, spec, init, weights, rows, opts);
    }
    UndisturbedPredictor pred(data, ell, N, opts.predictor);
    return build_ocp(pred, basis, spec, init, weights, rows, opts);
}

OcpSolution solve_ocp(const OcpProblem& p, const SocpOptions& opts) {
    const SocpResult r = solve_qp_socp(p.P, p.q, p.G, p.h, p.dims, opts);
    switch (r.status) {
        case SolverStatus::optimal: break;
        case SolverStatus::infeasible:
            throw InfeasibleProblem("optimal control problem is infeasible");
        case SolverStatus::unbounded:
            throw UnboundedProblem("optimal control problem is unbounded below");
        case SolverStatus::max_iterations:
            throw MaxIterationsExceeded("cone solver hit the iteration limit (gap " +
                                        std::to_string(r.gap) + ")");
        case SolverStatus::numerical_breakdown:
            throw NumericalBreakdown("cone solver broke down numerically");
    }

    const int L = static_cast<int>(p.basis.size());
    OcpSolution sol;
    sol.status = r.status;
    sol.iterations = r.iterations;
    sol.gap = r.gap;
    sol.pres = r.pres;
    sol.dres = r.dres;
    sol.decisions = r.x;
    sol.cost = 0.5 * r.x.dot(p.P * r.x) + p.q.dot(r.x) + p.cost_const;

    sol.u = PceTrajectory("u", 1, p.basis, p.n_u, p.N);
    sol.y = PceTrajectory("y", 1, p.basis, p.n_y, p.N);
    for (int j = 0; j < L; ++j) {
        const int nu_j = p.n_u * (p.N - p.u_first[j] + 1);
        const Eigen::VectorXd uj = r.x.segment(p.offset[j], nu_j);
        for (int k = p.u_first[j]; k <= p.N; ++k)
            sol.u.coefs[k - 1].col(j) = uj.segment((k - p.u_first[j]) * p.n_u, p.n_u);
        const Eigen::VectorXd yj = p.maps[j].M * uj + p.maps[j].b;
        for (int k = p.y_first[j]; k <= p.N; ++k)
            sol.y.coefs[k - 1].col(j) = yj.segment((k - p.y_first[j]) * p.n_y, p.n_y);
    }
    return sol;
}

double recompute_cost(const OcpProblem& p, const OcpSolution& sol) {
    double j = 0.0;
    for (int k = 1; k <= p.N; ++k)
        j += second_moment_quadratic(sol.y, sol.u, p.weights.Q, p.weights.R, k);
    return j;
}

OpenLoopResult open_loop_experiment(const OcpProblem& p, int n_samples, std::uint64_t seed,
                                    int n_bins, const SocpOptions& solver_opts) {
    OpenLoopResult res;
    res.solution = solve_ocp(p, solver_opts);

    const int N = p.N;
    res.hist_y1.resize(N);
    res.hist_y2.resize(N);
    res.satisfaction.assign(N, 0.0);
    res.sample_std = Eigen::MatrixXd::Zero(p.n_y, N);

    Eigen::MatrixXd y1(n_samples, N), y2(n_samples, N);
    std::vector<Eigen::MatrixXd> samples; // n_y x N per sample
    samples.reserve(n_samples);
    for (int s = 0; s < n_samples; ++s) {
        const Eigen::VectorXd phi = sample_basis_values(p.basis, p.spec, seed, s);
        Eigen::MatrixXd yk(p.n_y, N);
        for (int k = 0; k < N; ++k) yk.col(k) = res.solution.y.coefs[k] * phi;
        y1.row(s) = yk.row(0);
        if (p.n_y > 1) y2.row(s) = yk.row(1);
        samples.push_back(std::move(yk));
    }
    for (int k = 0; k < N; ++k) {
        res.hist_y1[k] = histogram(y1.col(k), n_bins);
        if (p.n_y > 1) res.hist_y2[k] = histogram(y2.col(k), n_bins);
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(p.n_y), m2 = Eigen::VectorXd::Zero(p.n_y);
        for (const auto& yk : samples) mu += yk.col(k);
        mu /= n_samples;
        for (const auto& yk : samples) m2 += (yk.col(k) - mu).cwiseAbs2();
        res.sample_std.col(k) = (m2 / std::max(1, n_samples - 1)).cwiseSqrt();
        if (!p.rows.empty()) {
            const ChanceRow& row = p.rows.front();
            int ok = 0;
            for (int s = 0; s < n_samples; ++s) {
                const double v = samples[s](row.component, k);
                if (v >= row.lower && v <= row.upper) ++ok;
            }
            res.satisfaction[k] = static_cast<double>(ok) / n_samples;
        }
    }
    return res;
}

} // namespace sfl
