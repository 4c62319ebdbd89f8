#include "sfl/serialize.hpp"

#include <fstream>
#include <sstream>

#include "sfl/errors.hpp"

namespace sfl {

namespace {

std::string csv_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

namespace {

/// Surface structural JSON problems (missing keys, wrong types) as ParseError.
template <typename F>
auto parsed(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
}

} // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
    std::vector<double> data;
    data.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ParseError("matrix data length does not match rows*cols");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[r * cols + c];
    return m;
}

json to_json(const StateSpaceModel& m) {
    return json{{"type", "state_space"},
                {"A", matrix_to_json(m.A)},
                {"B", matrix_to_json(m.B)},
                {"C", matrix_to_json(m.C)},
                {"E", matrix_to_json(m.E)}};
}

StateSpaceModel state_space_from_json(const json& j) {
    return parsed([&] {
        return StateSpaceModel(matrix_from_json(j.at("A")), matrix_from_json(j.at("B")),
                               matrix_from_json(j.at("C")), matrix_from_json(j.at("E")));
    });
}

json to_json(const VarxModel& m) {
    return json{{"type", "varx"},
                {"A_hat", matrix_to_json(m.A_hat)},
                {"B_hat", matrix_to_json(m.B_hat)},
                {"E_hat", matrix_to_json(m.E_hat)},
                {"lag", m.lag},
                {"output_noise", m.output_noise}};
}

VarxModel varx_from_json(const json& j) {
    return parsed([&] {
        const int lag = j.at("lag").get<int>();
        if (j.value("output_noise", false) && !j.contains("E_hat"))
            return VarxModel(matrix_from_json(j.at("A_hat")), matrix_from_json(j.at("B_hat")), lag);
        if (!j.contains("E_hat"))
            return VarxModel(matrix_from_json(j.at("A_hat")), matrix_from_json(j.at("B_hat")), lag);
        return VarxModel(matrix_from_json(j.at("A_hat")), matrix_from_json(j.at("B_hat")),
                         matrix_from_json(j.at("E_hat")), lag, j.value("output_noise", false));
    });
}

json to_json(const DisturbanceSpec& spec) {
    json comps = json::array();
    for (const auto& c : spec.components) {
        switch (c.kind) {
            case DistKind::uniform:
                comps.push_back(json{{"kind", "uniform"}, {"a", c.a}, {"b", c.b}});
                break;
            case DistKind::gaussian:
                comps.push_back(json{{"kind", "gaussian"}, {"mu", c.mu}, {"sigma2", c.sigma2}});
                break;
            default:
                throw ParseError("generic distributions have no JSON form");
        }
    }
    return json{{"components", comps}};
}

DisturbanceSpec disturbance_spec_from_json(const json& j) {
    return parsed([&] {
        DisturbanceSpec spec;
        for (const auto& c : j.at("components")) {
            const std::string kind = c.at("kind").get<std::string>();
            if (kind == "uniform")
                spec.components.push_back(
                    ComponentDist::uniform(c.at("a").get<double>(), c.at("b").get<double>()));
            else if (kind == "gaussian")
                spec.components.push_back(
                    ComponentDist::gaussian(c.at("mu").get<double>(), c.at("sigma2").get<double>()));
            else
                throw ParseError("unknown distribution kind '" + kind + "'");
        }
        return spec;
    });
}

json to_json(const RealTrajectory& t) {
    json j{{"start_time", t.start_time},
           {"u", matrix_to_json(t.u)},
           {"y", matrix_to_json(t.y)}};
    if (t.w) j["w"] = matrix_to_json(*t.w);
    return j;
}

RealTrajectory trajectory_from_json(const json& j) {
    return parsed([&] {
        RealTrajectory t;
        t.start_time = j.at("start_time").get<int>();
        t.u = matrix_from_json(j.at("u"));
        t.y = matrix_from_json(j.at("y"));
        if (j.contains("w")) t.w = matrix_from_json(j.at("w"));
        return t;
    });
}

json to_json(const RankCertificate& c) {
    return json{{"rank", c.rank},
                {"required", c.required},
                {"pass", c.pass},
                {"singular_values",
                 std::vector<double>(c.singular_values.data(),
                                     c.singular_values.data() + c.singular_values.size())},
                {"condition_number", c.condition_number()}};
}

json to_json(const SolveReport& r) {
    return json{{"residuals", r.residuals}, {"ranks", r.ranks}, {"n_g", r.n_g}};
}

json to_json(const PceTrajectory& t) {
    json steps = json::array();
    for (const auto& c : t.coefs) steps.push_back(matrix_to_json(c));
    return json{{"name", t.name},
                {"start_time", t.start_time},
                {"horizon", t.basis.N},
                {"per_step_size", t.basis.L_w},
                {"init_block", t.basis.n_init},
                {"coefs", steps}};
}

json to_json(const OcpSolution& s) {
    return json{{"u", to_json(s.u)},
                {"y", to_json(s.y)},
                {"cost", s.cost},
                {"status", to_string(s.status)},
                {"iterations", s.iterations},
                {"gap", s.gap},
                {"pres", s.pres},
                {"dres", s.dres}};
}

json to_json(const SchemeReport& r) {
    json j{{"scheme", to_string(r.scheme)},
           {"seed", r.seed},
           {"executed", to_json(r.executed)},
           {"J_cl", r.J_cl},
           {"step_times", r.step_times},
           {"time_mean_s", r.time_mean_s},
           {"time_sd_s", r.time_sd_s},
           {"hankel_nonzeros", r.hankel_nonzeros},
           {"failed", r.failed}};
    if (r.failed) j["error"] = r.error;
    return j;
}

json to_json(const BenchmarkResult& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back(json{{"scheme", to_string(row.scheme)},
                            {"nonzeros", row.hankel_nonzeros},
                            {"time_mean_s", row.time_mean_s},
                            {"time_sd_s", row.time_sd_s},
                            {"J_cl", row.J_cl_mean},
                            {"successes", row.successes},
                            {"failures", row.failures}});
    return json{{"rows", rows}};
}

std::string trajectory_to_csv(const RealTrajectory& t) {
    std::ostringstream os;
    os << "k";
    for (int c = 0; c < t.n_u(); ++c) os << ",u_" << c + 1;
    for (int c = 0; c < t.n_y(); ++c) os << ",y_" << c + 1;
    if (t.w)
        for (Eigen::Index c = 0; c < t.w->rows(); ++c) os << ",w_" << c + 1;
    os << "\n";
    for (int i = 0; i < t.length(); ++i) {
        os << t.start_time + i;
        for (int c = 0; c < t.n_u(); ++c) os << "," << csv_number(t.u(c, i));
        for (int c = 0; c < t.n_y(); ++c) os << "," << csv_number(t.y(c, i));
        if (t.w)
            for (Eigen::Index c = 0; c < t.w->rows(); ++c) os << "," << csv_number((*t.w)(c, i));
        os << "\n";
    }
    return os.str();
}

RealTrajectory trajectory_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty trajectory CSV");
    int n_u = 0, n_y = 0, n_w = 0;
    const auto header = split(line, ',');
    if (header.empty() || header[0] != "k")
        throw ParseError("trajectory CSV must start with a 'k' column");
    for (size_t i = 1; i < header.size(); ++i) {
        if (header[i].rfind("u_", 0) == 0) ++n_u;
        else if (header[i].rfind("y_", 0) == 0) ++n_y;
        else if (header[i].rfind("w_", 0) == 0) ++n_w;
        else throw ParseError("unknown trajectory CSV column '" + header[i] + "'");
    }
    std::vector<std::vector<double>> rows;
    std::vector<int> times;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size())
            throw ParseError("trajectory CSV row has the wrong number of cells");
        times.push_back(std::stoi(cells[0]));
        std::vector<double> row;
        for (size_t i = 1; i < cells.size(); ++i) row.push_back(std::stod(cells[i]));
        rows.push_back(std::move(row));
    }
    const int len = static_cast<int>(rows.size());
    for (int i = 1; i < len; ++i)
        if (times[i] != times[0] + i) throw ParseError("trajectory CSV time stamps not contiguous");

    RealTrajectory t;
    t.start_time = len ? times[0] : 0;
    t.u.resize(n_u, len);
    t.y.resize(n_y, len);
    if (n_w) t.w = Eigen::MatrixXd(n_w, len);
    for (int i = 0; i < len; ++i) {
        int p = 0;
        for (int c = 0; c < n_u; ++c) t.u(c, i) = rows[i][p++];
        for (int c = 0; c < n_y; ++c) t.y(c, i) = rows[i][p++];
        for (int c = 0; c < n_w; ++c) (*t.w)(c, i) = rows[i][p++];
    }
    return t;
}

std::string pce_to_csv(const PceTrajectory& t) {
    std::ostringstream os;
    os << "k,j,component,value\n";
    for (int i = 0; i < t.length(); ++i)
        for (Eigen::Index j = 0; j < t.coefs[i].cols(); ++j)
            for (Eigen::Index c = 0; c < t.coefs[i].rows(); ++c)
                os << t.start_time + i << "," << j << "," << c + 1 << ","
                   << csv_number(t.coefs[i](c, j)) << "\n";
    return os.str();
}

std::string histograms_to_csv(const std::vector<std::vector<HistogramBin>>& per_step,
                              int first_k) {
    std::ostringstream os;
    os << "k,bin_left,bin_right,density\n";
    for (size_t i = 0; i < per_step.size(); ++i)
        for (const auto& b : per_step[i])
            os << first_k + static_cast<int>(i) << "," << csv_number(b.left) << ","
               << csv_number(b.right) << "," << csv_number(b.density) << "\n";
    return os.str();
}

std::string benchmark_to_csv(const BenchmarkResult& r) {
    std::ostringstream os;
    os << "scheme,nonzeros,time_mean_s,time_sd_s,J_cl\n";
    for (const auto& row : r.rows)
        os << to_string(row.scheme) << "," << row.hankel_nonzeros << ","
           << csv_number(row.time_mean_s) << "," << csv_number(row.time_sd_s) << ","
           << csv_number(row.J_cl_mean) << "\n";
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw IoError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON in '") + path + "': " + e.what());
    }
}

} // namespace sfl
