#include "sfl/socp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

#include "sfl/errors.hpp"

namespace sfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Walk the cone layout: f(offset, dim, is_soc) per cone (orthant split row-wise).
template <typename F>
void for_each_cone(const ConeDims& dims, F&& f) {
    for (int i = 0; i < dims.l; ++i) f(i, 1, false);
    int off = dims.l;
    for (int d : dims.q) {
        f(off, d, true);
        off += d;
    }
}

// Jordan product u o v per cone.
Eigen::VectorXd jordan_mul(const ConeDims& dims, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& v) {
    Eigen::VectorXd r(u.size());
    for_each_cone(dims, [&](int off, int d, bool soc) {
        if (!soc) {
            r(off) = u(off) * v(off);
        } else {
            const auto u1 = u.segment(off + 1, d - 1);
            const auto v1 = v.segment(off + 1, d - 1);
            r(off) = u.segment(off, d).dot(v.segment(off, d));
            r.segment(off + 1, d - 1) = u(off) * v1 + v(off) * u1;
        }
    });
    return r;
}

// Solve lambda o x = u per cone (inverse of the arrow operator).
Eigen::VectorXd jordan_div(const ConeDims& dims, const Eigen::VectorXd& lambda,
                           const Eigen::VectorXd& u, bool& ok) {
    Eigen::VectorXd r(u.size());
    ok = true;
    for_each_cone(dims, [&](int off, int d, bool soc) {
        if (!soc) {
            if (lambda(off) <= 0) ok = false;
            r(off) = u(off) / lambda(off);
        } else {
            const double l0 = lambda(off);
            const auto l1 = lambda.segment(off + 1, d - 1);
            const double det = l0 * l0 - l1.squaredNorm();
            if (det <= 0 || l0 <= 0) {
                ok = false;
                return;
            }
            const double r0 = (l0 * u(off) - l1.dot(u.segment(off + 1, d - 1))) / det;
            r(off) = r0;
            r.segment(off + 1, d - 1) = (u.segment(off + 1, d - 1) - r0 * l1) / l0;
        }
    });
    return r;
}

Eigen::VectorXd cone_identity(const ConeDims& dims) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dims.rows());
    for_each_cone(dims, [&](int off, int d, bool soc) {
        e(off) = 1.0;
        (void)d;
        (void)soc;
    });
    return e;
}

// Largest t with u + t e in the cone boundary sense: max over cones of the
// distance to the cone (negative when strictly interior).
double max_step(const ConeDims& dims, const Eigen::VectorXd& u) {
    double t = -kInf;
    for_each_cone(dims, [&](int off, int d, bool soc) {
        if (!soc)
            t = std::max(t, -u(off));
        else
            t = std::max(t, u.segment(off + 1, d - 1).norm() - u(off));
    });
    return t;
}

// Largest alpha in [0, cap] with u + alpha du in the cone (u strictly interior).
double step_to_boundary(const ConeDims& dims, const Eigen::VectorXd& u,
                        const Eigen::VectorXd& du, double cap) {
    double alpha = cap;
    for_each_cone(dims, [&](int off, int d, bool soc) {
        if (!soc) {
            if (du(off) < 0) alpha = std::min(alpha, -u(off) / du(off));
        } else {
            const double u0 = u(off), d0 = du(off);
            const auto u1 = u.segment(off + 1, d - 1);
            const auto d1 = du.segment(off + 1, d - 1);
            const double a = d0 * d0 - d1.squaredNorm();
            const double b = 2 * (u0 * d0 - u1.dot(d1));
            const double c = u0 * u0 - u1.squaredNorm(); // > 0 strictly inside
            // feasible alphas form an interval [0, a*); find its right end
            double best = kInf;
            auto consider = [&](double r) {
                if (r > 0 && u0 + r * d0 >= -1e-14 * (1.0 + std::abs(u0))) best = std::min(best, r);
            };
            if (std::abs(a) < 1e-300) {
                if (b < 0) consider(-c / b);
            } else {
                const double disc = b * b - 4 * a * c;
                if (disc >= 0) {
                    const double sq = std::sqrt(disc);
                    consider((-b - sq) / (2 * a));
                    consider((-b + sq) / (2 * a));
                }
            }
            if (d0 < 0) best = std::min(best, -u0 / d0);
            alpha = std::min(alpha, best);
        }
    });
    return std::max(alpha, 0.0);
}

struct Scaling {
    // dense symmetric blocks per cone (1x1 for orthant rows)
    std::vector<Eigen::MatrixXd> W, Winv;
    Eigen::VectorXd lambda;
    bool ok = false;
};

Scaling compute_scaling(const ConeDims& dims, const Eigen::VectorXd& s,
                        const Eigen::VectorXd& z) {
    Scaling sc;
    sc.lambda.resize(dims.rows());
    sc.ok = true;
    for_each_cone(dims, [&](int off, int d, bool soc) {
        if (!soc) {
            if (s(off) <= 0 || z(off) <= 0) {
                sc.ok = false;
                return;
            }
            const double w = std::sqrt(s(off) / z(off));
            sc.W.push_back(Eigen::MatrixXd::Constant(1, 1, w));
            sc.Winv.push_back(Eigen::MatrixXd::Constant(1, 1, 1.0 / w));
            sc.lambda(off) = std::sqrt(s(off) * z(off));
        } else {
            const auto sb = s.segment(off, d);
            const auto zb = z.segment(off, d);
            auto jnorm2 = [d](const Eigen::VectorXd& v) {
                return v(0) * v(0) - v.tail(d - 1).squaredNorm();
            };
            const double sj = jnorm2(sb), zj = jnorm2(zb);
            if (sj <= 0 || zj <= 0 || sb(0) <= 0 || zb(0) <= 0) {
                sc.ok = false;
                return;
            }
            const Eigen::VectorXd st = sb / std::sqrt(sj);
            const Eigen::VectorXd zt = zb / std::sqrt(zj);
            const double gamma = std::sqrt((1.0 + st.dot(zt)) / 2.0);
            Eigen::VectorXd jz = zt;
            jz.tail(d - 1) = -zt.tail(d - 1);
            Eigen::VectorXd v = (st + jz) / (2.0 * gamma);
            v(0) += 1.0;
            v /= std::sqrt(2.0 * v(0)); // half-angle form; v' J v = 1
            Eigen::MatrixXd J = -Eigen::MatrixXd::Identity(d, d);
            J(0, 0) = 1.0;
            const double beta = std::pow(sj / zj, 0.25);
            Eigen::VectorXd jv = v;
            jv.tail(d - 1) = -v.tail(d - 1);
            Eigen::MatrixXd Wb = beta * (2.0 * v * v.transpose() - J);
            Eigen::MatrixXd Wib = (2.0 * jv * jv.transpose() - J) / beta;
            sc.lambda.segment(off, d) = Wb * zb;
            sc.W.push_back(std::move(Wb));
            sc.Winv.push_back(std::move(Wib));
        }
    });
    return sc;
}

// y = (block-diagonal B) * v
Eigen::VectorXd apply_blocks(const ConeDims& dims, const std::vector<Eigen::MatrixXd>& B,
                             const Eigen::VectorXd& v) {
    Eigen::VectorXd r(v.size());
    int idx = 0;
    for_each_cone(dims, [&](int off, int d, bool) {
        r.segment(off, d) = B[idx] * v.segment(off, d);
        ++idx;
    });
    return r;
}

Eigen::MatrixXd apply_blocks(const ConeDims& dims, const std::vector<Eigen::MatrixXd>& B,
                             const Eigen::MatrixXd& M) {
    Eigen::MatrixXd r(M.rows(), M.cols());
    int idx = 0;
    for_each_cone(dims, [&](int off, int d, bool) {
        r.middleRows(off, d) = B[idx] * M.middleRows(off, d);
        ++idx;
    });
    return r;
}

} // namespace

const char* to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::optimal: return "optimal";
        case SolverStatus::infeasible: return "infeasible";
        case SolverStatus::unbounded: return "unbounded";
        case SolverStatus::max_iterations: return "max_iterations";
        case SolverStatus::numerical_breakdown: return "numerical_breakdown";
    }
    return "unknown";
}

SocpResult solve_qp_socp(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                         const ConeDims& dims, const SocpOptions& opts, const Eigen::MatrixXd& A,
                         const Eigen::VectorXd& b) {
    const int n = static_cast<int>(q.size());
    const int m = static_cast<int>(G.rows());
    const int p = static_cast<int>(A.rows());
    if (P.rows() != n || P.cols() != n || (m && static_cast<int>(G.cols()) != n) ||
        h.size() != m || dims.rows() != m || (p && static_cast<int>(A.cols()) != n) ||
        b.size() != p)
        throw DimensionMismatch("cone program blocks have inconsistent sizes");

    SocpResult res;

    // no inequalities: plain equality-constrained QP
    if (m == 0) {
        Eigen::MatrixXd K(n + p, n + p);
        K.setZero();
        K.topLeftCorner(n, n) = P;
        if (p) {
            K.topRightCorner(n, p) = A.transpose();
            K.bottomLeftCorner(p, n) = A;
        }
        Eigen::VectorXd rhs(n + p);
        rhs.head(n) = -q;
        rhs.tail(p) = b;
        const Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
        res.x = sol.head(n);
        res.y = sol.tail(p);
        res.s.resize(0);
        res.z.resize(0);
        res.pcost = 0.5 * res.x.dot(P * res.x) + q.dot(res.x);
        res.dcost = res.pcost;
        res.dres = (P * res.x + q + (p ? Eigen::VectorXd(A.transpose() * res.y)
                                       : Eigen::VectorXd::Zero(n)))
                       .norm();
        res.pres = p ? (A * res.x - b).norm() : 0.0;
        res.status = res.x.allFinite() ? SolverStatus::optimal : SolverStatus::numerical_breakdown;
        return res;
    }

    const double resx0 = std::max(1.0, q.norm());
    const double resy0 = std::max(1.0, p ? b.norm() : 0.0);
    const double resz0 = std::max(1.0, h.norm());
    const int deg = dims.degree();
    const Eigen::VectorXd e = cone_identity(dims);

    // KKT solve with the current scaling:
    //   [P + G'W^-2 G, A'; A, 0][dx;dy] = [bx + G'W^-2 bz; by],  dz = W^-2(G dx - bz)
    Eigen::VectorXd x, y = Eigen::VectorXd::Zero(p), s, z;
    // without equalities the reduced matrix is positive definite (Cholesky);
    // the saddle form needs the LU fallback
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::MatrixXd GW; // W^-1 G under the current scaling, shared by the solves

    auto factor = [&](const Scaling& sc) {
        GW = apply_blocks(dims, sc.Winv, G);
        Eigen::MatrixXd K11 = P;
        K11.selfadjointView<Eigen::Lower>().rankUpdate(GW.transpose());
        if (p == 0) {
            llt.compute(K11.selfadjointView<Eigen::Lower>());
            if (llt.info() == Eigen::Success) return;
        }
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + p, n + p);
        K.topLeftCorner(n, n) = K11.selfadjointView<Eigen::Lower>();
        if (p) {
            K.topRightCorner(n, p) = A.transpose();
            K.bottomLeftCorner(p, n) = A;
        }
        lu.compute(K);
    };
    auto solve_once = [&](const Scaling& sc, const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                          const Eigen::VectorXd& bz, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                          Eigen::VectorXd& dz) {
        const Eigen::VectorXd wbz = apply_blocks(dims, sc.Winv, bz);
        if (p == 0 && llt.info() == Eigen::Success) {
            dx = llt.solve(bx + GW.transpose() * wbz);
            dy.resize(0);
        } else {
            Eigen::VectorXd rhs(n + p);
            rhs.head(n) = bx + GW.transpose() * wbz;
            if (p) rhs.tail(p) = by;
            const Eigen::VectorXd sol = lu.solve(rhs);
            dx = sol.head(n);
            dy = sol.tail(p);
        }
        const Eigen::VectorXd gb = G * dx - bz;
        const Eigen::VectorXd wgb = apply_blocks(dims, sc.Winv, gb);
        dz = apply_blocks(dims, sc.Winv, wgb);
    };
    // one step of iterative refinement keeps the directions accurate once the
    // scaling becomes extreme near the solution
    auto solve_kkt = [&](const Scaling& sc, const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                         const Eigen::VectorXd& bz, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                         Eigen::VectorXd& dz) {
        solve_once(sc, bx, by, bz, dx, dy, dz);
        for (int pass = 0; pass < 2; ++pass) {
            Eigen::VectorXd r1 = P * dx + G.transpose() * dz - bx;
            if (p) r1 += A.transpose() * dy;
            const Eigen::VectorXd r2 = p ? Eigen::VectorXd(A * dx - by) : Eigen::VectorXd();
            const Eigen::VectorXd wdz = apply_blocks(dims, sc.W, dz);
            const Eigen::VectorXd r3 =
                G * dx - apply_blocks(dims, sc.W, wdz) - bz;
            Eigen::VectorXd cx, cy, cz;
            solve_once(sc, r1, r2, r3, cx, cy, cz);
            dx -= cx;
            if (p) dy -= cy;
            dz -= cz;
        }
    };

    // ---- initialization with W = I
    {
        Scaling id;
        for_each_cone(dims, [&](int, int d, bool) {
            id.W.push_back(Eigen::MatrixXd::Identity(d, d));
            id.Winv.push_back(Eigen::MatrixXd::Identity(d, d));
        });
        id.lambda = e;
        id.ok = true;
        factor(id);
        Eigen::VectorXd dz;
        solve_kkt(id, -q, p ? b : Eigen::VectorXd(), h, x, y, dz);
        z = dz;
        s = -z;
        const double ts = max_step(dims, s);
        if (ts >= 0) s += (1.0 + ts) * e;
        const double tz = max_step(dims, z);
        if (tz >= 0) z += (1.0 + tz) * e;
        if (!x.allFinite() || !s.allFinite() || !z.allFinite()) {
            res.status = SolverStatus::numerical_breakdown;
            return res;
        }
    }

    for (int iter = 0; iter <= opts.max_iters; ++iter) {
        const double f0 = 0.5 * x.dot(P * x) + q.dot(x);
        Eigen::VectorXd rx = P * x + q + G.transpose() * z;
        if (p) rx += A.transpose() * y;
        const Eigen::VectorXd ry = p ? Eigen::VectorXd(A * x - b) : Eigen::VectorXd();
        const Eigen::VectorXd rz = G * x + s - h;
        const double gap = s.dot(z);

        res.pcost = f0;
        res.dcost = f0 + (p ? y.dot(ry) : 0.0) + z.dot(rz) - gap;
        res.gap = gap;
        res.relgap = res.pcost < 0   ? gap / -res.pcost
                     : res.dcost > 0 ? gap / res.dcost
                                     : kInf;
        res.pres = std::max(p ? ry.norm() / resy0 : 0.0, rz.norm() / resz0);
        res.dres = rx.norm() / resx0;
        res.iterations = iter;
        res.x = x;
        res.y = y;
        res.s = s;
        res.z = z;

        static const bool trace = std::getenv("SFL_SOCP_TRACE") != nullptr;
        if (trace)
            std::fprintf(stderr, "it %3d  pcost % .6e  gap %.3e  pres %.3e  dres %.3e\n", iter,
                         res.pcost, res.gap, res.pres, res.dres);

        if (res.pres <= opts.feastol && res.dres <= opts.feastol &&
            (gap <= opts.abstol || res.relgap <= opts.reltol)) {
            res.status = SolverStatus::optimal;
            return res;
        }

        // primal infeasibility certificate: z (with y) close to the Farkas ray
        {
            const double ray = h.dot(z) + (p ? b.dot(y) : 0.0);
            if (ray < 0) {
                Eigen::VectorXd gz = G.transpose() * z;
                if (p) gz += A.transpose() * y;
                if (gz.norm() / (-ray) <= opts.feastol) {
                    res.status = SolverStatus::infeasible;
                    return res;
                }
            }
        }
        // dual infeasibility / unbounded-below guard
        if (f0 < -1e30) {
            res.status = SolverStatus::unbounded;
            return res;
        }
        if (iter == opts.max_iters) break;

        const Scaling sc = compute_scaling(dims, s, z);
        if (!sc.ok) {
            res.status = SolverStatus::numerical_breakdown;
            return res;
        }
        factor(sc);

        const double mu = gap / deg;
        bool ok = true;

        // affine (predictor) direction: rhs_c = -lambda o lambda
        Eigen::VectorXd dxa, dya, dza;
        {
            const Eigen::VectorXd bz = -rz + s; // -rz - W(lambda \ rhs_c) with rhs_c = -l o l
            solve_kkt(sc, -rx, p ? Eigen::VectorXd(-ry) : Eigen::VectorXd(), bz, dxa, dya, dza);
        }
        const Eigen::VectorXd dsa_t = -sc.lambda - apply_blocks(dims, sc.W, dza); // scaled ds
        const Eigen::VectorXd dza_t = apply_blocks(dims, sc.W, dza);
        const Eigen::VectorXd dsa = apply_blocks(dims, sc.W, dsa_t);

        double alpha_a = std::min(step_to_boundary(dims, s, dsa, kInf),
                                  step_to_boundary(dims, z, dza, kInf));
        alpha_a = std::min(alpha_a, 1.0);
        const double sigma = std::pow(std::clamp(1.0 - alpha_a, 0.0, 1.0), 3.0);

        // combined (corrector) direction
        const Eigen::VectorXd rhs_c = sigma * mu * e - jordan_mul(dims, sc.lambda, sc.lambda) -
                                      jordan_mul(dims, dsa_t, dza_t);
        const Eigen::VectorXd lam_div = jordan_div(dims, sc.lambda, rhs_c, ok);
        if (!ok) {
            res.status = SolverStatus::numerical_breakdown;
            return res;
        }
        Eigen::VectorXd dx, dy, dz;
        {
            const Eigen::VectorXd bz = -rz - apply_blocks(dims, sc.W, lam_div);
            solve_kkt(sc, -rx, p ? Eigen::VectorXd(-ry) : Eigen::VectorXd(), bz, dx, dy, dz);
        }
        const Eigen::VectorXd ds_t = lam_div - apply_blocks(dims, sc.W, dz);
        const Eigen::VectorXd ds = apply_blocks(dims, sc.W, ds_t);

        double alpha = std::min(step_to_boundary(dims, s, ds, kInf),
                                step_to_boundary(dims, z, dz, kInf));
        alpha = std::min(1.0, opts.step_frac * alpha);
        if (!std::isfinite(alpha) || alpha <= 0) {
            res.status = SolverStatus::numerical_breakdown;
            return res;
        }

        x += alpha * dx;
        if (p) y += alpha * dy;
        s += alpha * ds;
        z += alpha * dz;
        if (!x.allFinite() || !s.allFinite() || !z.allFinite()) {
            res.status = SolverStatus::numerical_breakdown;
            return res;
        }
    }

    // distinguish a stalled-but-feasible run from a likely-infeasible one
    res.status = SolverStatus::max_iterations;
    if (res.pres > 1e-6 && res.gap <= 1e-6 * std::max(1.0, std::abs(res.pcost)))
        res.status = SolverStatus::infeasible;
    return res;
}

} // namespace sfl
