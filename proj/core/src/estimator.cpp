#include "sfl/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sfl/errors.hpp"
#include "sfl/hankel.hpp"
#include "sfl/linalg.hpp"
#include "sfl/rng.hpp"

namespace sfl {

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

} // namespace

Eigen::VectorXd stack_window(const Eigen::MatrixXd& u_win, const Eigen::MatrixXd& y_win) {
    Eigen::VectorXd z(u_win.size() + y_win.size());
    z.head(u_win.size()) = flatten(u_win);
    z.tail(y_win.size()) = flatten(y_win);
    return z;
}

Eigen::VectorXd FeedbackLaw::apply(const Eigen::MatrixXd& u_win, const Eigen::MatrixXd& y_win,
                                   const Eigen::VectorXd& v) const {
    return K * stack_window(u_win.rightCols(ell), y_win.rightCols(ell)) + v;
}

void companion_form(const VarxModel& m, Eigen::MatrixXd& F, Eigen::MatrixXd& G) {
    const int n_u = static_cast<int>(m.B_hat.cols()) / m.lag;
    const int n_y = static_cast<int>(m.A_hat.rows());
    const int ell = m.lag;
    const int nz = ell * (n_u + n_y);
    F = Eigen::MatrixXd::Zero(nz, nz);
    G = Eigen::MatrixXd::Zero(nz, n_u);

    // input window shift
    for (int i = 0; i < ell - 1; ++i)
        F.block(i * n_u, (i + 1) * n_u, n_u, n_u).setIdentity();
    G.block((ell - 1) * n_u, 0, n_u, n_u).setIdentity();
    // output window shift
    const int y0 = ell * n_u;
    for (int i = 0; i < ell - 1; ++i)
        F.block(y0 + i * n_y, y0 + (i + 1) * n_y, n_y, n_y).setIdentity();
    // newest output row: y_k = A_hat * y_win + B_hat * u_win
    F.block(y0 + (ell - 1) * n_y, 0, n_y, ell * n_u) = m.B_hat;
    F.block(y0 + (ell - 1) * n_y, y0, n_y, ell * n_y) = m.A_hat;
}

Eigen::MatrixXd dlqr(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int max_iters,
                     double tol) {
    Eigen::MatrixXd P = Q;
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::MatrixXd GtP = G.transpose() * P;
        const Eigen::MatrixXd S = R + GtP * G;
        const Eigen::MatrixXd Kk = S.ldlt().solve(GtP * F);
        const Eigen::MatrixXd Pn =
            Q + F.transpose() * P * F - F.transpose() * P * G * Kk;
        const double diff = (Pn - P).lpNorm<Eigen::Infinity>();
        P = 0.5 * (Pn + Pn.transpose());
        if (diff < tol * (1.0 + P.lpNorm<Eigen::Infinity>())) break;
    }
    const Eigen::MatrixXd GtP = G.transpose() * P;
    return -(R + GtP * G).ldlt().solve(GtP * F);
}

Eigen::MatrixXd estimate_disturbances(const RealTrajectory& data, int ell, double rank_rtol) {
    const int T = data.length();
    if (T < ell + 1)
        throw TooShort("need at least " + std::to_string(ell + 1) + " samples to estimate");
    const int n_u = static_cast<int>(data.u.rows());
    const int n_y = static_cast<int>(data.y.rows());
    const int m = T - ell;

    Eigen::MatrixXd P(ell * (n_y + n_u), m);
    P.topRows(ell * n_y) = hankel(data.y.leftCols(T - 1), ell);
    P.bottomRows(ell * n_u) = hankel(data.u.leftCols(T - 1), ell);
    const Eigen::MatrixXd Y = data.y.rightCols(m);

    // equilibrate the rows first: the projector onto the row space is scale
    // invariant, but the rank decision is not, and dithered inputs can be many
    // orders of magnitude below a diverging output
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        const double n = P.row(r).norm();
        if (n > 0) P.row(r) /= n;
    }

    if (numerical_rank(P, rank_rtol) < P.rows())
        throw RankDeficientData("regressor windows are rank deficient; the record is not "
                                "exciting enough for disturbance estimation");

    const Eigen::MatrixXd proj = pseudo_inverse(P, rank_rtol) * P;
    return Y - Y * proj;
}

VarxModel identify_varx(const RealTrajectory& data, const Eigen::MatrixXd& w, int ell,
                        double rank_rtol) {
    const int T = data.length();
    const int n_u = static_cast<int>(data.u.rows());
    const int n_y = static_cast<int>(data.y.rows());
    const int m = T - ell;
    if (w.cols() < m || w.rows() != n_y)
        throw DimensionMismatch("disturbance record does not cover the regression targets");

    Eigen::MatrixXd P(ell * (n_y + n_u), m);
    P.topRows(ell * n_y) = hankel(data.y.leftCols(T - 1), ell);
    P.bottomRows(ell * n_u) = hankel(data.u.leftCols(T - 1), ell);
    // y_k = A_hat y_win + B_hat u_win + w_{k-1}
    const Eigen::MatrixXd Y = data.y.rightCols(m) - w.leftCols(m);

    // equilibrate the rows before the rank decision; the least-squares fit is
    // recovered afterwards by applying the same scaling to the coefficients
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(P.rows());
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        const double n = P.row(r).norm();
        if (n > 0) {
            scale(r) = 1.0 / n;
            P.row(r) *= scale(r);
        }
    }

    if (numerical_rank(P, rank_rtol) < P.rows())
        throw RankDeficientData("regressor windows are rank deficient; cannot identify");

    const Eigen::MatrixXd theta =
        (Y * pseudo_inverse(P, rank_rtol)) * scale.asDiagonal(); // n_y x ell(n_y+n_u)
    VarxModel m_out(theta.leftCols(ell * n_y), theta.rightCols(ell * n_u), ell);
    return m_out;
}

RealTrajectory generate_undisturbed_trajectory(const RealTrajectory& data,
                                               const Eigen::MatrixXd& w_hat, int ell, int T_hat,
                                               const RealTrajectory& init,
                                               const SynthesisOptions& opts) {
    const int T = data.length();
    const int n_u = static_cast<int>(data.u.rows());
    const int n_y = static_cast<int>(data.y.rows());
    const int depth = T_hat + ell;
    if (T - depth + 1 < 1)
        throw TooShort("requested continuation of " + std::to_string(T_hat) +
                       " steps exceeds what a record of length " + std::to_string(T) +
                       " can host");
    if (init.length() < ell)
        throw InitTooShort("init window shorter than the model lag");
    // the disturbance record must cover every window start
    if (w_hat.cols() < T - ell)
        throw DimensionMismatch("disturbance estimate does not cover the record");

    const RankCertificate cert = is_persistently_exciting(data.u, depth, opts.pe_rtol);
    if (!cert.pass)
        throw NotPersistentlyExciting("recorded input is not exciting enough for a depth-" +
                                      std::to_string(depth) + " continuation");

    const Eigen::MatrixXd hu = hankel(data.u, depth);
    const Eigen::MatrixXd hy = hankel(data.y, depth);
    // window i covers data times [start+i, start+i+depth-1]; the disturbances
    // driving its synthesized part start at estimate column i
    const Eigen::MatrixXd hw = hankel(w_hat.leftCols(T - ell), T_hat);
    const int n_g = static_cast<int>(hu.cols());
    if (hw.cols() != n_g)
        throw DimensionMismatch("disturbance-window count does not match the I/O windows");

    Eigen::MatrixXd pin(ell * (n_u + n_y) + T_hat * n_y, n_g);
    pin.topRows(ell * n_u) = hu.topRows(ell * n_u);
    pin.middleRows(ell * n_u, ell * n_y) = hy.topRows(ell * n_y);
    pin.bottomRows(T_hat * n_y) = hw;

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pin.rows());
    rhs.head(ell * n_u) = flatten(init.u.rightCols(ell));
    rhs.segment(ell * n_u, ell * n_y) = flatten(init.y.rightCols(ell));

    const Eigen::VectorXd g = lstsq_min_norm(pin, rhs, opts.rank_rtol);
    const double resid = (pin * g - rhs).norm();
    if (resid > opts.pin_tol * (1.0 + rhs.norm()))
        throw InfeasibleStack("init window and zeroed disturbances cannot be matched "
                              "(residual " + std::to_string(resid) + ")");

    RealTrajectory out;
    out.start_time = init.start_time + init.length();
    out.u.resize(n_u, T_hat);
    out.y.resize(n_y, T_hat);
    const Eigen::VectorXd uf = hu.bottomRows(T_hat * n_u) * g;
    const Eigen::VectorXd yf = hy.bottomRows(T_hat * n_y) * g;
    out.u = Eigen::Map<const Eigen::MatrixXd>(uf.data(), n_u, T_hat);
    out.y = Eigen::Map<const Eigen::MatrixXd>(yf.data(), n_y, T_hat);
    return out;
}

RealTrajectory synthesize_undisturbed_data(const RealTrajectory& data,
                                           const Eigen::MatrixXd& w_hat, int ell, int chunk,
                                           int total, const RealTrajectory& init,
                                           const SynthesisOptions& opts) {
    if (chunk < 1 || total < 1) throw DimensionMismatch("chunk and total must be positive");
    const int n_u = static_cast<int>(data.u.rows());
    const int n_y = static_cast<int>(data.y.rows());

    RealTrajectory out;
    out.start_time = init.start_time + init.length() - ell;
    out.u.resize(n_u, ell + total);
    out.y.resize(n_y, ell + total);
    out.u.leftCols(ell) = init.u.rightCols(ell);
    out.y.leftCols(ell) = init.y.rightCols(ell);

    int have = 0;
    while (have < total) {
        const int take = std::min(chunk, total - have);
        RealTrajectory win;
        win.start_time = out.start_time + have;
        win.u = out.u.middleCols(have, ell);
        win.y = out.y.middleCols(have, ell);
        const RealTrajectory piece =
            generate_undisturbed_trajectory(data, w_hat, ell, take, win, opts);
        out.u.middleCols(ell + have, take) = piece.u;
        out.y.middleCols(ell + have, take) = piece.y;
        have += take;
    }
    return out;
}

NearOriginResult generate_undisturbed_near_origin(const RealTrajectory& data,
                                                  const Eigen::MatrixXd& w_hat,
                                                  const Eigen::MatrixXd& K, int ell, int T_hat,
                                                  const Eigen::MatrixXd& v,
                                                  const RealTrajectory& init,
                                                  const SynthesisOptions& opts) {
    const int T = data.length();
    const int n_u = static_cast<int>(data.u.rows());
    const int n_y = static_cast<int>(data.y.rows());
    const int nz = ell * (n_u + n_y);
    if (K.rows() != n_u || K.cols() != nz)
        throw DimensionMismatch("feedback gain must be n_u x ell*(n_u+n_y)");
    if (v.rows() != n_u || v.cols() != T_hat)
        throw DimensionMismatch("new-input block must be n_u x T_hat");
    if (init.length() < ell) throw InitTooShort("init window shorter than the model lag");

    // transformed signals over steps 1..T-ell+1 (each needs a full past window)
    const int Tz = T - ell + 1;
    if (Tz - T_hat + 1 < 1)
        throw TooShort("record too short for the requested near-origin continuation");
    Eigen::MatrixXd z(nz, Tz), vv(n_u, Tz);
    for (int k = 0; k < Tz; ++k) {
        z.col(k) = stack_window(data.u.middleCols(k, ell), data.y.middleCols(k, ell));
        const int uk = k + ell; // input applied at the step after the window
        vv.col(k) = (uk < T ? Eigen::VectorXd(data.u.col(uk)) : Eigen::VectorXd::Zero(n_u)) -
                    K * z.col(k);
    }

    const Eigen::MatrixXd hv = hankel(vv, T_hat);
    const Eigen::MatrixXd hz = hankel(z, T_hat);
    // z window starting at step k evolves under disturbances from estimate column k
    const int usable_w = Tz - 1;
    if (w_hat.cols() < usable_w)
        throw DimensionMismatch("disturbance estimate does not cover the record");
    const Eigen::MatrixXd hw =
        (T_hat > 1) ? hankel(w_hat.leftCols(usable_w), T_hat - 1) : Eigen::MatrixXd(0, hz.cols());
    const int n_g = static_cast<int>(hz.cols());

    Eigen::MatrixXd pin(T_hat * n_u + nz + ((T_hat > 1) ? (T_hat - 1) * n_y : 0), n_g);
    pin.topRows(T_hat * n_u) = hv;
    pin.middleRows(T_hat * n_u, nz) = hz.topRows(nz);
    if (T_hat > 1) pin.bottomRows((T_hat - 1) * n_y) = hw.leftCols(n_g);

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pin.rows());
    rhs.head(T_hat * n_u) = flatten(v);
    rhs.segment(T_hat * n_u, nz) =
        stack_window(init.u.rightCols(ell), init.y.rightCols(ell));

    const Eigen::VectorXd g = lstsq_min_norm(pin, rhs, opts.rank_rtol);
    const double resid = (pin * g - rhs).norm();
    if (resid > opts.pin_tol * (1.0 + rhs.norm()))
        throw InfeasibleStack("near-origin stack cannot match the pinned rows (residual " +
                              std::to_string(resid) + ")");

    const Eigen::VectorXd zsol = hz * g;
    NearOriginResult res;
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(pin);
        const auto& s = svd.singularValues();
        res.stack_condition = (s.size() && s(s.size() - 1) > 0)
                                  ? s(0) / s(s.size() - 1)
                                  : std::numeric_limits<double>::infinity();
    }

    // unpack: z_k embeds the I/O window [k-ell, k-1]; walking k = 1..T_hat and
    // appending the newest rows recovers the trajectory over [1-ell, T_hat-1]
    RealTrajectory& out = res.traj;
    out.start_time = 1 - ell;
    out.u.resize(n_u, ell + T_hat - 1);
    out.y.resize(n_y, ell + T_hat - 1);
    for (int k = 0; k < T_hat; ++k) {
        const Eigen::VectorXd zk = zsol.segment(k * nz, nz);
        const Eigen::Map<const Eigen::MatrixXd> uw(zk.data(), n_u, ell);
        const Eigen::Map<const Eigen::MatrixXd> yw(zk.data() + ell * n_u, n_y, ell);
        if (k == 0) {
            out.u.leftCols(ell) = uw;
            out.y.leftCols(ell) = yw;
        } else {
            out.u.col(ell + k - 1) = uw.col(ell - 1);
            out.y.col(ell + k - 1) = yw.col(ell - 1);
        }
    }
    return res;
}

FeedbackLaw find_stabilizing_feedback(Plant& plant, std::uint64_t seed,
                                      const FeedbackSearchParams& params) {
    const int n_u = plant.n_u();
    const int n_y = plant.n_y();
    const int ell = plant.lag();
    const int nz = ell * (n_u + n_y);

    FeedbackLaw law;
    law.K = Eigen::MatrixXd::Zero(n_u, nz);
    law.dither = params.dither;
    law.ell = ell;

    rng::Stream root(seed);
    for (int iter = 0; iter < params.max_iters; ++iter) {
        rng::Stream it_stream = root.substream(static_cast<std::uint64_t>(iter));

        // (i) sample a short closed-loop record under the current gain
        RealTrajectory rec = plant.reset(rng::key(seed, 0x726573ULL, iter, 0, 0));
        const int T = params.sample_len;
        Eigen::MatrixXd u(n_u, ell + T), y(n_y, ell + T);
        u.leftCols(ell) = rec.u.rightCols(ell);
        y.leftCols(ell) = rec.y.rightCols(ell);
        // an unstable plant may diverge under the current gain; the record is
        // truncated once its dynamic range would swamp the regression, and
        // identification proceeds on the well-scaled prefix
        const double ident_limit =
            params.ident_range * (1.0 + y.leftCols(ell).colwise().norm().maxCoeff());
        int usable = T;
        for (int k = 0; k < T; ++k) {
            Eigen::VectorXd v(n_u);
            for (int c = 0; c < n_u; ++c)
                v(c) = it_stream.substream("dither").substream(k).substream(c).uniform(
                    -params.dither, params.dither);
            const Eigen::VectorXd uk =
                law.K * stack_window(u.middleCols(k, ell), y.middleCols(k, ell)) + v;
            u.col(ell + k) = uk;
            y.col(ell + k) = plant.step(uk);
            const double yn = y.col(ell + k).norm();
            if (!std::isfinite(yn) || yn > std::min(ident_limit, params.overflow)) {
                usable = k;
                break;
            }
        }
        if (usable < nz + 2)
            throw PlantUnbounded("plant overflowed before enough samples were collected");
        RealTrajectory record;
        record.start_time = 1 - ell;
        record.u = u.leftCols(ell + usable);
        record.y = y.leftCols(ell + usable);

        // (ii) estimate the disturbances, (iii) identify and synthesize a gain
        Eigen::MatrixXd w_hat;
        VarxModel ident(Eigen::MatrixXd::Zero(n_y, ell * n_y),
                        Eigen::MatrixXd::Zero(n_y, ell * n_u), ell);
        bool identified = false;
        try {
            w_hat = estimate_disturbances(record, ell);
            ident = identify_varx(record, w_hat, ell);
            identified = true;
        } catch (const RankDeficientData&) {
            identified = false;
        }
        FeedbackLaw candidate = law;
        if (identified) {
            Eigen::MatrixXd F, G;
            companion_form(ident, F, G);
            candidate.K = dlqr(F, G, Eigen::MatrixXd::Identity(nz, nz),
                               Eigen::MatrixXd::Identity(n_u, n_u));
        }

        // (iv) boundedness test on a fresh episode: after a short transient the
        // output must settle inside a ball scaled by the observed early response
        // (the stationary disturbance amplification is not known a priori)
        RealTrajectory test = plant.reset(rng::key(seed, 0x746573ULL, iter, 0, 0));
        Eigen::MatrixXd tu(n_u, ell + params.bound_window), ty(n_y, ell + params.bound_window);
        tu.leftCols(ell) = test.u.rightCols(ell);
        ty.leftCols(ell) = test.y.rightCols(ell);
        const int warmup = std::max(ell + 1, params.bound_window / 5);
        double scale = 1.0 + ty.leftCols(ell).colwise().norm().maxCoeff();
        bool bounded = true;
        for (int k = 0; k < params.bound_window && bounded; ++k) {
            Eigen::VectorXd v(n_u);
            for (int c = 0; c < n_u; ++c)
                v(c) = it_stream.substream("test").substream(k).substream(c).uniform(
                    -params.dither, params.dither);
            const Eigen::VectorXd uk =
                candidate.K * stack_window(tu.middleCols(k, ell), ty.middleCols(k, ell)) + v;
            tu.col(ell + k) = uk;
            const Eigen::VectorXd yk = plant.step(uk);
            ty.col(ell + k) = yk;
            if (!yk.allFinite() || yk.norm() > params.overflow) {
                bounded = false;
            } else if (k < warmup) {
                scale = std::max(scale, yk.norm());
            } else if (yk.norm() > params.ball_factor * scale) {
                bounded = false;
            }
        }
        if (bounded) return candidate;
        law = candidate; // keep refining from the latest gain
    }
    throw MaxIterationsExceeded("no gain passed the boundedness test within " +
                                std::to_string(params.max_iters) + " iterations");
}

} // namespace sfl
