#include "sfl/closed_loop.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <thread>

#include "sfl/errors.hpp"
#include "sfl/hankel.hpp"
#include "sfl/rng.hpp"

namespace sfl {

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::VectorXd draw_disturbance(const DisturbanceSpec& spec, std::uint64_t seed, int t) {
    Eigen::VectorXd w(spec.n_w());
    for (int c = 0; c < spec.n_w(); ++c) {
        const auto& comp = spec.components[c];
        const double u01 = rng::uniform01(rng::key(seed, rng::stream_id("w"), t, c));
        w(c) = comp.mean() + comp.stddev() * comp.standardized(u01);
    }
    return w;
}

} // namespace

// ---------------------------------------------------------------------------
// VarxPlant

VarxPlant::VarxPlant(VarxModel truth, DisturbanceSpec spec, Eigen::VectorXd init_mean,
                     double init_spread)
    : truth_(std::move(truth)), spec_(std::move(spec)), init_mean_(std::move(init_mean)),
      init_spread_(init_spread) {
    if (init_mean_.size() == 0) init_mean_ = Eigen::VectorXd::Zero(truth_.n_y());
    if (init_mean_.size() != truth_.n_y())
        throw DimensionMismatch("initial output mean has the wrong dimension");
    last_w_ = Eigen::VectorXd::Zero(spec_.n_w());
}

RealTrajectory VarxPlant::reset(std::uint64_t episode_seed) {
    seed_ = episode_seed;
    t_ = 0;
    const int ell = truth_.lag;
    u_win_ = Eigen::MatrixXd::Zero(truth_.n_u(), ell);
    y_win_.resize(truth_.n_y(), ell);
    for (int i = 0; i < ell; ++i)
        for (int c = 0; c < truth_.n_y(); ++c) {
            const double u01 = rng::uniform01(rng::key(seed_, rng::stream_id("init"), i, c));
            y_win_(c, i) = init_mean_(c) + init_spread_ * (2.0 * u01 - 1.0);
        }
    RealTrajectory init;
    init.start_time = 1 - ell;
    init.u = u_win_;
    init.y = y_win_;
    return init;
}

Eigen::VectorXd VarxPlant::step(const Eigen::VectorXd& u) {
    // y_{t+1} depends on the windows up to time t and the disturbance w_t;
    // the new input enters the window afterwards and acts from t+2 on
    last_w_ = draw_disturbance(spec_, seed_, t_);
    Eigen::VectorXd y_next =
        truth_.A_hat * flatten(y_win_) + truth_.B_hat * flatten(u_win_) + last_w_;
    const int ell = truth_.lag;
    u_win_.leftCols(ell - 1) = u_win_.rightCols(ell - 1).eval();
    u_win_.col(ell - 1) = u;
    y_win_.leftCols(ell - 1) = y_win_.rightCols(ell - 1).eval();
    y_win_.col(ell - 1) = y_next;
    ++t_;
    return y_next;
}

// ---------------------------------------------------------------------------
// offline data

RealTrajectory collect_feedback_data(const VarxModel& truth, const DisturbanceSpec& spec,
                                     const FeedbackLaw& law, int T, std::uint64_t seed,
                                     bool disturbed) {
    const int ell = truth.lag;
    const int n_u = truth.n_u(), n_y = truth.n_y(), n_w = truth.n_w();
    if (T <= ell) throw TooShort("data length must exceed the model lag");

    RealTrajectory rec;
    rec.start_time = 1 - ell;
    rec.u = Eigen::MatrixXd::Zero(n_u, T);
    rec.y = Eigen::MatrixXd::Zero(n_y, T);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_w, T);

    for (int k = ell; k < T; ++k) { // absolute time k + rec.start_time = k - ell + 1
        Eigen::VectorXd v(n_u);
        for (int c = 0; c < n_u; ++c)
            v(c) = law.dither *
                   (2.0 * rng::uniform01(rng::key(seed, rng::stream_id("dither"), k, c)) - 1.0);
        rec.u.col(k) =
            law.K * stack_window(rec.u.middleCols(k - ell, ell), rec.y.middleCols(k - ell, ell)) +
            v;
        // disturbance at the previous time step drives this output
        Eigen::VectorXd wk = Eigen::VectorXd::Zero(n_w);
        if (disturbed) wk = draw_disturbance(spec, seed, k - 1);
        w.col(k - 1) = wk;
        rec.y.col(k) = truth.A_hat * flatten(rec.y.middleCols(k - ell, ell)) +
                       truth.B_hat * flatten(rec.u.middleCols(k - ell, ell)) + wk;
    }
    if (disturbed) rec.w = w;
    return rec;
}

OfflineData prepare_offline_data(const VarxModel& truth, const DisturbanceSpec& spec,
                                 const ClosedLoopConfig& cfg, std::uint64_t seed) {
    OfflineData off;
    const int ell = truth.lag;

    VarxPlant search_plant(truth, spec, Eigen::VectorXd::Zero(truth.n_y()), cfg.init_spread);
    FeedbackSearchParams params;
    params.dither = cfg.dither;
    off.law = find_stabilizing_feedback(search_plant, rng::key(seed, rng::stream_id("fbk")),
                                        params);

    off.undisturbed = collect_feedback_data(truth, spec, off.law, cfg.T,
                                            rng::key(seed, rng::stream_id("data-ud")), false);
    off.disturbed = collect_feedback_data(truth, spec, off.law, cfg.T,
                                          rng::key(seed, rng::stream_id("data-d")), true);

    // scheme III: estimate the disturbances, then synthesize an undisturbed
    // record near the origin in chunks, re-seeding the window between chunks
    const Eigen::MatrixXd w_hat = estimate_disturbances(off.disturbed, ell);
    const int n_u = truth.n_u(), n_y = truth.n_y();
    RealTrajectory synth;
    synth.start_time = 1 - ell;
    synth.u = Eigen::MatrixXd::Zero(n_u, cfg.T);
    synth.y = Eigen::MatrixXd::Zero(n_y, cfg.T);
    int have = ell;
    rng::Stream vs(rng::key(seed, rng::stream_id("synth")));
    while (have < cfg.T) {
        const int take = std::min(cfg.synthesis_chunk, cfg.T - have);
        const int T_hat = take + 1;
        Eigen::MatrixXd v(n_u, T_hat);
        for (int i = 0; i < T_hat; ++i)
            for (int c = 0; c < n_u; ++c) v(c, i) = vs.uniform(-cfg.dither, cfg.dither);
        RealTrajectory win;
        win.start_time = synth.start_time + have - ell;
        win.u = synth.u.middleCols(have - ell, ell);
        win.y = synth.y.middleCols(have - ell, ell);
        const NearOriginResult piece = generate_undisturbed_near_origin(
            off.disturbed, w_hat, off.law.K, ell, T_hat, v, win);
        off.synthesis_condition = std::max(off.synthesis_condition, piece.stack_condition);
        synth.u.middleCols(have, take) = piece.traj.u.rightCols(T_hat - 1).leftCols(take);
        synth.y.middleCols(have, take) = piece.traj.y.rightCols(T_hat - 1).leftCols(take);
        have += take;
    }
    off.synthesized = synth;
    return off;
}

// ---------------------------------------------------------------------------
// receding horizon

SchemeReport run_closed_loop(Scheme scheme, const VarxModel& truth, const DisturbanceSpec& spec,
                             const RealTrajectory& data, const ClosedLoopConfig& cfg,
                             std::uint64_t seed) {
    const int ell = truth.lag;
    const int n_u = truth.n_u(), n_y = truth.n_y(), n_w = truth.n_w();
    const JointBasis basis = build_joint_basis(spec, cfg.N);

    SchemeReport rep;
    rep.scheme = scheme;
    rep.seed = seed;

    VarxPlant plant(truth, spec, cfg.init_mean.size() ? cfg.init_mean
                                                      : Eigen::VectorXd::Zero(n_y),
                    cfg.init_spread);
    const RealTrajectory init = plant.reset(rng::key(seed, rng::stream_id("run")));

    RealTrajectory& ex = rep.executed;
    ex.start_time = init.start_time;
    ex.u = Eigen::MatrixXd::Zero(n_u, ell + cfg.steps);
    ex.y = Eigen::MatrixXd::Zero(n_y, ell + cfg.steps);
    ex.w = Eigen::MatrixXd::Zero(n_w, ell + cfg.steps);
    ex.u.leftCols(ell) = init.u;
    ex.y.leftCols(ell) = init.y;

    {
        HankelDims hd{n_u, n_y, n_w, ell, cfg.N, basis.L(), data.length() - ell - cfg.N + 1};
        rep.hankel_nonzeros = count_nonzero_entries(
            scheme == Scheme::II ? CountScheme::disturbed_stack : CountScheme::shortened_stages, hd);
    }

    for (int i = 0; i < cfg.steps; ++i) {
        RealTrajectory win;
        win.start_time = ex.start_time + i;
        win.u = ex.u.middleCols(i, ell);
        win.y = ex.y.middleCols(i, ell);
        if (scheme == Scheme::II) win.w = ex.w->middleCols(i, ell);

        try {
            const auto t0 = std::chrono::steady_clock::now();
            const OcpProblem prob = build_ocp(scheme, data, ell, cfg.N, basis, spec, win,
                                              cfg.weights, cfg.rows, cfg.build);
            const OcpSolution sol = solve_ocp(prob, cfg.solver);
            const auto t1 = std::chrono::steady_clock::now();
            rep.step_times.push_back(std::chrono::duration<double>(t1 - t0).count());

            const Eigen::VectorXd u_apply = sol.u.coefs[0].col(0); // mean first input
            const Eigen::VectorXd y_next = plant.step(u_apply);
            ex.u.col(ell + i) = u_apply;
            ex.y.col(ell + i) = y_next;
            // the disturbance that produced y at time t drives from time t-1
            ex.w->col(ell + i - 1) = plant.last_disturbance();
        } catch (const Error& e) {
            rep.failed = true;
            rep.error = e.what();
            ex.u.conservativeResize(n_u, ell + i);
            ex.y.conservativeResize(n_y, ell + i);
            ex.w->conservativeResize(n_w, ell + i);
            break;
        }
    }

    const int done = static_cast<int>(ex.u.cols()) - ell;
    for (int i = 0; i < done; ++i) {
        const Eigen::VectorXd yk = ex.y.col(ell + i);
        const Eigen::VectorXd uk = ex.u.col(ell + i);
        rep.J_cl += yk.dot(cfg.weights.Q * yk) + uk.dot(cfg.weights.R * uk);
    }
    if (!rep.step_times.empty()) {
        double m = 0;
        for (double t : rep.step_times) m += t;
        m /= rep.step_times.size();
        double v = 0;
        for (double t : rep.step_times) v += (t - m) * (t - m);
        rep.time_mean_s = m;
        rep.time_sd_s = rep.step_times.size() > 1
                            ? std::sqrt(v / (rep.step_times.size() - 1))
                            : 0.0;
    }
    return rep;
}

BenchmarkResult benchmark_schemes(const VarxModel& truth, const DisturbanceSpec& spec,
                                  const ClosedLoopConfig& cfg, int n_samples, std::uint64_t seed,
                                  int workers, const std::vector<Scheme>& schemes) {
    const OfflineData off = prepare_offline_data(truth, spec, cfg, seed);
    auto data_for = [&](Scheme s) -> const RealTrajectory& {
        switch (s) {
            case Scheme::I: return off.undisturbed;
            case Scheme::II: return off.disturbed;
            default: return off.synthesized;
        }
    };

    if (workers <= 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n_samples);

    // one strided slice of the sample indices per worker
    std::vector<std::vector<SchemeReport>> all(n_samples);
    auto run_slice = [&](int w) {
        for (int idx = w; idx < n_samples; idx += workers) {
            const std::uint64_t s = rng::key(seed, rng::stream_id("sample"), idx);
            std::vector<SchemeReport> reports;
            reports.reserve(schemes.size());
            for (Scheme sch : schemes)
                reports.push_back(run_closed_loop(sch, truth, spec, data_for(sch), cfg, s));
            all[idx] = std::move(reports);
        }
    };
    std::vector<std::future<void>> futs;
    for (int w = 1; w < workers; ++w)
        futs.push_back(std::async(std::launch::async, run_slice, w));
    run_slice(0);
    for (auto& f : futs) f.get();

    BenchmarkResult res;
    for (size_t si = 0; si < schemes.size(); ++si) {
        BenchmarkRow row;
        row.scheme = schemes[si];
        double jsum = 0;
        std::vector<double> times;
        for (int idx = 0; idx < n_samples; ++idx) {
            const SchemeReport& rep = all[idx][si];
            if (rep.failed) {
                ++row.failures;
                continue;
            }
            ++row.successes;
            jsum += rep.J_cl;
            times.insert(times.end(), rep.step_times.begin(), rep.step_times.end());
            row.hankel_nonzeros = rep.hankel_nonzeros;
        }
        if (row.successes) row.J_cl_mean = jsum / row.successes;
        if (!times.empty()) {
            double m = 0;
            for (double t : times) m += t;
            m /= times.size();
            double v = 0;
            for (double t : times) v += (t - m) * (t - m);
            row.time_mean_s = m;
            row.time_sd_s = times.size() > 1 ? std::sqrt(v / (times.size() - 1)) : 0.0;
        }
        res.rows.push_back(row);
        res.sample_reports.push_back(all[0][si]);
    }
    return res;
}

} // namespace sfl
