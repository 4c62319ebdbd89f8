// Command-line front end: configuration loading, data collection, disturbance
// estimation, prediction, the open-loop OCP study, closed-loop runs, and the
// multi-sample scheme benchmark. All outputs are CSV/JSON files.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sfl/aircraft.hpp"
#include "sfl/closed_loop.hpp"
#include "sfl/config.hpp"
#include "sfl/serialize.hpp"

namespace fs = std::filesystem;
using namespace sfl;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kSolverError = 4 };

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool validate_only = false;
    std::string log_level = "info";
};

int g_verbosity = 1; // 0 quiet, 1 info, 2 debug

void log_info(const std::string& msg) {
    if (g_verbosity >= 1) std::cerr << msg << "\n";
}

ExperimentConfig make_config(const GlobalFlags& g) {
    ExperimentConfig cfg =
        g.config_path.empty() ? aircraft_config() : load_config(g.config_path);
    if (g.seed_set) cfg.seed = g.seed;
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    return cfg;
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "'");
    return dir;
}

json run_metadata(const ExperimentConfig& cfg, const VarxModel& m) {
    return json{{"seed", cfg.seed},
                {"n_u", m.n_u()},
                {"n_y", m.n_y()},
                {"ell", m.lag},
                {"T", cfg.T},
                {"N", cfg.N}};
}

/// Initial window used by predict/ocp: constant inputs 0, outputs init_mean.
RealTrajectory nominal_window(const ExperimentConfig& cfg, const VarxModel& m) {
    RealTrajectory win;
    win.start_time = 1 - m.lag;
    win.u = Eigen::MatrixXd::Zero(m.n_u(), m.lag);
    win.y = (cfg.init_mean.size() ? cfg.init_mean : Eigen::VectorXd::Zero(m.n_y()))
                .replicate(1, m.lag);
    return win;
}

int cmd_collect(const GlobalFlags& g) {
    ExperimentConfig cfg = make_config(g);
    VarxModel truth = resolve_model(cfg);
    if (g.validate_only) return kOk;
    const fs::path dir = ensure_out_dir(cfg);

    log_info("searching for a stabilizing feedback and recording data...");
    OfflineData off = prepare_offline_data(truth, cfg.disturbance, to_closed_loop_config(cfg),
                                           cfg.seed);
    write_text_file((dir / "undisturbed.csv").string(), trajectory_to_csv(off.undisturbed));
    write_text_file((dir / "disturbed.csv").string(), trajectory_to_csv(off.disturbed));
    write_text_file((dir / "synthesized.csv").string(), trajectory_to_csv(off.synthesized));
    json meta = run_metadata(cfg, truth);
    meta["feedback_gain"] = matrix_to_json(off.law.K);
    meta["dither"] = off.law.dither;
    meta["synthesis_condition"] = off.synthesis_condition;
    write_json_file((dir / "collect.json").string(), meta);
    log_info("wrote undisturbed.csv, disturbed.csv, synthesized.csv, collect.json");
    return kOk;
}

int cmd_estimate(const GlobalFlags& g, const std::string& data_path) {
    ExperimentConfig cfg = make_config(g);
    VarxModel truth = resolve_model(cfg);
    if (g.validate_only) return kOk;
    const fs::path dir = ensure_out_dir(cfg);

    RealTrajectory data;
    if (!data_path.empty()) {
        data = trajectory_from_csv(read_text_file(data_path));
    } else {
        log_info("no data file given; recording a disturbed run first...");
        OfflineData off = prepare_offline_data(truth, cfg.disturbance,
                                               to_closed_loop_config(cfg), cfg.seed);
        data = off.disturbed;
    }
    const Eigen::MatrixXd w_hat = estimate_disturbances(data, cfg.ell);

    RealTrajectory west;
    west.start_time = data.start_time + cfg.ell - 1;
    west.u = Eigen::MatrixXd::Zero(0, w_hat.cols());
    west.y = Eigen::MatrixXd::Zero(0, w_hat.cols());
    west.w = w_hat;
    write_text_file((dir / "w_hat.csv").string(), trajectory_to_csv(west));

    const int T_hat = std::min(cfg.T_hat + 1, data.length() - cfg.ell + 1);
    RealTrajectory init = data.slice(data.start_time, data.start_time + cfg.ell - 1);
    RealTrajectory synth =
        synthesize_undisturbed_data(data, w_hat, cfg.ell, T_hat, cfg.T, init);
    write_text_file((dir / "synthesized.csv").string(), trajectory_to_csv(synth));
    write_json_file((dir / "estimate.json").string(), run_metadata(cfg, truth));
    log_info("wrote w_hat.csv, synthesized.csv, estimate.json");
    return kOk;
}

int cmd_predict(const GlobalFlags& g, const std::string& data_path) {
    ExperimentConfig cfg = make_config(g);
    VarxModel truth = resolve_model(cfg);
    if (g.validate_only) return kOk;
    const fs::path dir = ensure_out_dir(cfg);

    RealTrajectory data;
    if (!data_path.empty()) {
        data = trajectory_from_csv(read_text_file(data_path));
    } else {
        OfflineData off = prepare_offline_data(truth, cfg.disturbance,
                                               to_closed_loop_config(cfg), cfg.seed);
        data = off.undisturbed;
    }
    UndisturbedPredictor pred(data, cfg.ell, cfg.N, cfg.predictor);
    const JointBasis basis = build_joint_basis(cfg.disturbance, cfg.N);
    const RealTrajectory win = nominal_window(cfg, truth);
    PceTrajectory u_free("u", 1, basis, truth.n_u(), cfg.N); // zero free inputs
    Prediction pr = pred.propagate_all(basis, cfg.disturbance, win, u_free);

    write_text_file((dir / "prediction_u.csv").string(), pce_to_csv(pr.u));
    write_text_file((dir / "prediction_y.csv").string(), pce_to_csv(pr.y));
    json rep = run_metadata(cfg, truth);
    rep["solve_report"] = to_json(pr.report);
    rep["excitation"] = to_json(pred.pe_certificate());
    write_json_file((dir / "predict.json").string(), rep);
    log_info("wrote prediction_u.csv, prediction_y.csv, predict.json");
    return kOk;
}

int cmd_ocp(const GlobalFlags& g, const std::string& data_path) {
    ExperimentConfig cfg = make_config(g);
    VarxModel truth = resolve_model(cfg);
    if (g.validate_only) return kOk;
    const fs::path dir = ensure_out_dir(cfg);

    RealTrajectory data;
    if (!data_path.empty()) {
        data = trajectory_from_csv(read_text_file(data_path));
    } else {
        OfflineData off = prepare_offline_data(truth, cfg.disturbance,
                                               to_closed_loop_config(cfg), cfg.seed);
        data = off.undisturbed;
    }
    const JointBasis basis = build_joint_basis(cfg.disturbance, cfg.N);
    const RealTrajectory win = nominal_window(cfg, truth);
    OcpBuildOptions build;
    build.predictor = cfg.predictor;
    log_info("assembling and solving the stochastic OCP...");
    OcpProblem p = build_ocp(Scheme::I, data, cfg.ell, cfg.N, basis, cfg.disturbance, win,
                             cfg.weights, cfg.chance_rows, build);
    OpenLoopResult r = open_loop_experiment(p, cfg.n_mc_samples, cfg.seed, cfg.n_bins,
                                            cfg.solver);

    write_json_file((dir / "solution.json").string(), to_json(r.solution));
    write_text_file((dir / "hist_y1.csv").string(), histograms_to_csv(r.hist_y1));
    write_text_file((dir / "hist_y2.csv").string(), histograms_to_csv(r.hist_y2));
    json sat = run_metadata(cfg, truth);
    sat["satisfaction"] = r.satisfaction;
    sat["cost"] = r.solution.cost;
    write_json_file((dir / "ocp.json").string(), sat);
    log_info("wrote solution.json, hist_y1.csv, hist_y2.csv, ocp.json");
    return kOk;
}

int cmd_closedloop(const GlobalFlags& g) {
    ExperimentConfig cfg = make_config(g);
    VarxModel truth = resolve_model(cfg);
    if (g.validate_only) return kOk;
    const fs::path dir = ensure_out_dir(cfg);
    const ClosedLoopConfig cl = to_closed_loop_config(cfg);

    log_info("preparing offline data...");
    OfflineData off = prepare_offline_data(truth, cfg.disturbance, cl, cfg.seed);
    bool any_failed = false;
    for (Scheme s : cfg.schemes) {
        const RealTrajectory& data = s == Scheme::I    ? off.undisturbed
                                     : s == Scheme::II ? off.disturbed
                                                       : off.synthesized;
        log_info(std::string("running scheme ") + to_string(s) + "...");
        SchemeReport rep = run_closed_loop(s, truth, cfg.disturbance, data, cl, cfg.seed);
        const std::string tag = std::string("scheme_") + to_string(s);
        write_json_file((dir / (tag + ".json")).string(), to_json(rep));
        write_text_file((dir / (tag + ".csv")).string(), trajectory_to_csv(rep.executed));
        any_failed = any_failed || rep.failed;
        if (rep.failed) log_info(tag + " failed: " + rep.error);
    }
    return any_failed ? kSolverError : kOk;
}

int cmd_benchmark(const GlobalFlags& g) {
    ExperimentConfig cfg = make_config(g);
    VarxModel truth = resolve_model(cfg);
    if (g.validate_only) return kOk;
    const fs::path dir = ensure_out_dir(cfg);

    log_info("benchmarking " + std::to_string(cfg.n_samples) + " samples per scheme...");
    BenchmarkResult res = benchmark_schemes(truth, cfg.disturbance, to_closed_loop_config(cfg),
                                            cfg.n_samples, cfg.seed, cfg.workers, cfg.schemes);
    write_text_file((dir / "table2.csv").string(), benchmark_to_csv(res));
    write_json_file((dir / "benchmark.json").string(), to_json(res));
    for (const auto& rep : res.sample_reports) {
        const std::string tag = std::string("sample_") + to_string(rep.scheme);
        write_text_file((dir / (tag + ".csv")).string(), trajectory_to_csv(rep.executed));
    }
    log_info("wrote table2.csv, benchmark.json and per-scheme sample trajectories");
    return kOk;
}

json error_report(const std::string& type, const std::string& message, int code) {
    return json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
}

int report(const std::string& type, const std::string& message, int code) {
    std::cout << error_report(type, message, code).dump() << std::endl;
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven stochastic trajectory prediction and control"};
    app.require_subcommand(1);
    app.fallthrough(); // accept the global flags after the subcommand too

    GlobalFlags g;
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--seed", g.seed, "root random seed (overrides config)")
        ->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--out", g.out_dir, "output directory (overrides config)");
    app.add_flag("--validate-only", g.validate_only,
                 "validate the configuration and data shapes, run nothing");
    app.add_option("--log-level", g.log_level, "quiet | info | debug")
        ->check(CLI::IsMember({"quiet", "info", "debug"}));

    std::string data_path;
    auto* collect = app.add_subcommand("collect", "record disturbed/undisturbed data");
    auto* estimate = app.add_subcommand("estimate", "estimate disturbances, synthesize data");
    estimate->add_option("--data", data_path, "disturbed trajectory CSV");
    auto* predict = app.add_subcommand("predict", "coefficient-level trajectory prediction");
    predict->add_option("--data", data_path, "undisturbed trajectory CSV");
    auto* ocp = app.add_subcommand("ocp", "open-loop stochastic OCP study");
    ocp->add_option("--data", data_path, "undisturbed trajectory CSV");
    auto* closedloop = app.add_subcommand("closedloop", "single closed-loop run per scheme");
    auto* benchmark = app.add_subcommand("benchmark", "multi-sample scheme comparison");

    CLI11_PARSE(app, argc, argv);
    g_verbosity = g.log_level == "quiet" ? 0 : g.log_level == "debug" ? 2 : 1;

    try {
        if (collect->parsed()) return cmd_collect(g);
        if (estimate->parsed()) return cmd_estimate(g, data_path);
        if (predict->parsed()) return cmd_predict(g, data_path);
        if (ocp->parsed()) return cmd_ocp(g, data_path);
        if (closedloop->parsed()) return cmd_closedloop(g);
        if (benchmark->parsed()) return cmd_benchmark(g);
    } catch (const ConfigError& e) {
        return report("config", e.what(), kConfigError);
    } catch (const SolverFailure& e) {
        return report("solver", e.what(), kSolverError);
    } catch (const MaxIterationsExceeded& e) {
        return report("solver", e.what(), kSolverError);
    } catch (const Error& e) {
        return report("data", e.what(), kDataError);
    } catch (const std::exception& e) {
        return report("internal", e.what(), kDataError);
    }
    return kOk;
}
