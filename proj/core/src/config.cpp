#include "sfl/config.hpp"

#include <sstream>

#include "sfl/aircraft.hpp"
#include "sfl/errors.hpp"

namespace sfl {

namespace {

Scheme scheme_from_string(const std::string& s) {
    if (s == "I" || s == "1") return Scheme::I;
    if (s == "II" || s == "2") return Scheme::II;
    if (s == "III" || s == "3") return Scheme::III;
    throw ConfigError("unknown scheme '" + s + "' (expected I, II or III)");
}

Eigen::VectorXd vector_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vector_to_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

} // namespace

ExperimentConfig aircraft_config() {
    ExperimentConfig cfg;
    cfg.model = aircraft_varx();
    cfg.disturbance = aircraft_uniform_disturbance();
    cfg.weights.Q = Eigen::MatrixXd::Identity(3, 3);
    cfg.weights.R = Eigen::MatrixXd::Identity(1, 1);
    cfg.chance_rows = {ChanceRow{0, -0.349, 0.349, 0.8, 3.0}};
    cfg.init_mean = Eigen::Vector3d(0.0, -100.0, 0.0);
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    if (cfg.model) j["model"] = to_json(*cfg.model);
    if (!cfg.model_file.empty()) j["model_file"] = cfg.model_file;
    j["disturbance"] = to_json(cfg.disturbance);
    j["ell"] = cfg.ell;
    j["N"] = cfg.N;
    j["steps"] = cfg.steps;
    j["T"] = cfg.T;
    j["T_hat"] = cfg.T_hat;
    json schemes = json::array();
    for (Scheme s : cfg.schemes) schemes.push_back(to_string(s));
    j["schemes"] = schemes;
    j["Q"] = matrix_to_json(cfg.weights.Q);
    j["R"] = matrix_to_json(cfg.weights.R);
    json rows = json::array();
    for (const auto& r : cfg.chance_rows)
        rows.push_back(json{{"component", r.component},
                            {"lower", r.lower},
                            {"upper", r.upper},
                            {"level", r.level},
                            {"kappa", r.kappa}});
    j["chance_rows"] = rows;
    j["solver"] = json{{"abstol", cfg.solver.abstol},
                       {"reltol", cfg.solver.reltol},
                       {"feastol", cfg.solver.feastol},
                       {"max_iters", cfg.solver.max_iters}};
    j["predictor"] = json{{"rank_rtol", cfg.predictor.rank_rtol},
                          {"pe_rtol", cfg.predictor.pe_rtol},
                          {"pin_tol", cfg.predictor.pin_tol},
                          {"ridge", cfg.predictor.ridge}};
    j["seed"] = cfg.seed;
    j["n_samples"] = cfg.n_samples;
    j["n_mc_samples"] = cfg.n_mc_samples;
    j["n_bins"] = cfg.n_bins;
    j["workers"] = cfg.workers;
    j["init_mean"] = vector_to_json(cfg.init_mean);
    j["init_spread"] = cfg.init_spread;
    j["dither"] = cfg.dither;
    j["out_dir"] = cfg.out_dir;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg = aircraft_config(); // unset fields keep the example defaults
    if (j.contains("model")) cfg.model = varx_from_json(j.at("model"));
    if (j.contains("model_file")) cfg.model_file = j.at("model_file").get<std::string>();
    if (j.contains("disturbance"))
        cfg.disturbance = disturbance_spec_from_json(j.at("disturbance"));
    cfg.ell = j.value("ell", cfg.ell);
    cfg.N = j.value("N", cfg.N);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.T = j.value("T", cfg.T);
    cfg.T_hat = j.value("T_hat", cfg.T_hat);
    if (j.contains("schemes")) {
        cfg.schemes.clear();
        for (const auto& s : j.at("schemes"))
            cfg.schemes.push_back(scheme_from_string(s.get<std::string>()));
    }
    if (j.contains("Q")) cfg.weights.Q = matrix_from_json(j.at("Q"));
    if (j.contains("R")) cfg.weights.R = matrix_from_json(j.at("R"));
    if (j.contains("chance_rows")) {
        cfg.chance_rows.clear();
        for (const auto& r : j.at("chance_rows")) {
            ChanceRow row;
            row.component = r.value("component", 0);
            row.lower = r.at("lower").get<double>();
            row.upper = r.at("upper").get<double>();
            row.level = r.value("level", 0.8);
            row.kappa = r.value("kappa", 3.0);
            cfg.chance_rows.push_back(row);
        }
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        cfg.solver.abstol = s.value("abstol", cfg.solver.abstol);
        cfg.solver.reltol = s.value("reltol", cfg.solver.reltol);
        cfg.solver.feastol = s.value("feastol", cfg.solver.feastol);
        cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
    }
    if (j.contains("predictor")) {
        const auto& p = j.at("predictor");
        cfg.predictor.rank_rtol = p.value("rank_rtol", cfg.predictor.rank_rtol);
        cfg.predictor.pe_rtol = p.value("pe_rtol", cfg.predictor.pe_rtol);
        cfg.predictor.pin_tol = p.value("pin_tol", cfg.predictor.pin_tol);
        cfg.predictor.ridge = p.value("ridge", cfg.predictor.ridge);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n_samples = j.value("n_samples", cfg.n_samples);
    cfg.n_mc_samples = j.value("n_mc_samples", cfg.n_mc_samples);
    cfg.n_bins = j.value("n_bins", cfg.n_bins);
    cfg.workers = j.value("workers", cfg.workers);
    if (j.contains("init_mean")) cfg.init_mean = vector_from_json(j.at("init_mean"));
    cfg.init_spread = j.value("init_spread", cfg.init_spread);
    cfg.dither = j.value("dither", cfg.dither);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    try {
        return config_from_json(read_json_file(path));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> bad;
    if (!cfg.model && cfg.model_file.empty()) bad.push_back("model: no inline model or model_file");
    if (cfg.disturbance.n_w() == 0) bad.push_back("disturbance: no components");
    if (cfg.ell < 1) bad.push_back("ell: must be >= 1");
    if (cfg.N < 1) bad.push_back("N: must be >= 1");
    if (cfg.steps < 1) bad.push_back("steps: must be >= 1");
    if (cfg.T < cfg.ell + cfg.N) bad.push_back("T: must be >= ell + N");
    if (cfg.T_hat < 1) bad.push_back("T_hat: must be >= 1");
    if (cfg.schemes.empty()) bad.push_back("schemes: empty selection");
    if (cfg.weights.Q.rows() != cfg.weights.Q.cols()) bad.push_back("Q: must be square");
    if (cfg.weights.R.rows() != cfg.weights.R.cols()) bad.push_back("R: must be square");
    for (size_t i = 0; i < cfg.chance_rows.size(); ++i) {
        const auto& r = cfg.chance_rows[i];
        const std::string tag = "chance_rows[" + std::to_string(i) + "]";
        if (r.lower >= r.upper) bad.push_back(tag + ": lower >= upper");
        if (r.level <= 0.0 || r.level >= 1.0) bad.push_back(tag + ": level outside (0,1)");
        if (r.kappa < 0.0) bad.push_back(tag + ": negative backoff");
        if (r.component < 0) bad.push_back(tag + ": negative component");
    }
    if (cfg.solver.abstol <= 0) bad.push_back("solver.abstol: must be > 0");
    if (cfg.solver.feastol <= 0) bad.push_back("solver.feastol: must be > 0");
    if (cfg.solver.max_iters < 1) bad.push_back("solver.max_iters: must be >= 1");
    if (cfg.n_samples < 1) bad.push_back("n_samples: must be >= 1");
    if (cfg.n_mc_samples < 1) bad.push_back("n_mc_samples: must be >= 1");
    if (cfg.n_bins < 1) bad.push_back("n_bins: must be >= 1");
    if (cfg.workers < 0) bad.push_back("workers: must be >= 0");
    if (cfg.init_spread < 0) bad.push_back("init_spread: must be >= 0");
    if (cfg.dither < 0) bad.push_back("dither: must be >= 0");
    if (cfg.out_dir.empty()) bad.push_back("out_dir: empty");
    return bad;
}

VarxModel resolve_model(const ExperimentConfig& cfg) {
    const auto bad = validate_config(cfg);
    if (!bad.empty()) {
        std::ostringstream os;
        os << "invalid configuration:";
        for (const auto& b : bad) os << "\n  - " << b;
        throw ConfigError(os.str());
    }
    VarxModel m = cfg.model_file.empty() ? *cfg.model : varx_from_json(read_json_file(cfg.model_file));
    if (m.n_y() != cfg.disturbance.n_w())
        throw ConfigError("disturbance: component count must equal the model output dimension");
    if (cfg.weights.Q.rows() != m.n_y()) throw ConfigError("Q: size must equal n_y");
    if (cfg.weights.R.rows() != m.n_u()) throw ConfigError("R: size must equal n_u");
    if (cfg.init_mean.size() && cfg.init_mean.size() != m.n_y())
        throw ConfigError("init_mean: size must equal n_y");
    for (size_t i = 0; i < cfg.chance_rows.size(); ++i)
        if (cfg.chance_rows[i].component >= m.n_y())
            throw ConfigError("chance_rows[" + std::to_string(i) + "]: component out of range");
    return m;
}

ClosedLoopConfig to_closed_loop_config(const ExperimentConfig& cfg) {
    ClosedLoopConfig cl;
    cl.steps = cfg.steps;
    cl.N = cfg.N;
    cl.T = cfg.T;
    cl.weights = cfg.weights;
    cl.rows = cfg.chance_rows;
    cl.build.predictor = cfg.predictor;
    cl.solver = cfg.solver;
    cl.dither = cfg.dither;
    cl.init_mean = cfg.init_mean;
    cl.init_spread = cfg.init_spread;
    cl.synthesis_chunk = cfg.T_hat;
    return cl;
}

} // namespace sfl
