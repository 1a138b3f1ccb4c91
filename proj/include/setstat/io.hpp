#pragma once

#include <Eigen/Dense>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "setstat/convex_body.hpp"
#include "setstat/errors.hpp"
#include "setstat/frechet.hpp"
#include "setstat/simulate.hpp"

namespace setstat {

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("cannot write " + path.string());
    out << content;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& field, std::size_t line_no) {
    const std::string s = trim(field);
    if (s.empty())
        throw parse_error("line " + std::to_string(line_no) + ": empty numeric field");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
        throw parse_error("line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvLayout {
    int lower = -1, upper = -1, t = -1, e = -1;
    std::vector<int> x, z;
};

inline CsvLayout parse_interval_header(const std::vector<std::string>& names) {
    CsvLayout lay;
    lay.x.assign(names.size(), -1);
    lay.z.assign(names.size(), -1);
    int max_x = 0, max_z = 0;
    for (std::size_t c = 0; c < names.size(); ++c) {
        const std::string name = trim(names[c]);
        if (name == "L") lay.lower = static_cast<int>(c);
        else if (name == "U") lay.upper = static_cast<int>(c);
        else if (name == "t") lay.t = static_cast<int>(c);
        else if (name == "e") lay.e = static_cast<int>(c);
        else if (name.size() > 1 && (name[0] == 'x' || name[0] == 'z')) {
            char* end = nullptr;
            const long k = std::strtol(name.c_str() + 1, &end, 10);
            if (*end != '\0' || k < 1 || k > static_cast<long>(names.size()))
                throw parse_error("line 1: unknown column '" + name + "'");
            auto& slots = name[0] == 'x' ? lay.x : lay.z;
            auto& top = name[0] == 'x' ? max_x : max_z;
            slots[static_cast<std::size_t>(k - 1)] = static_cast<int>(c);
            top = std::max(top, static_cast<int>(k));
        } else {
            throw parse_error("line 1: unknown column '" + name + "'");
        }
    }
    if (lay.lower < 0 || lay.upper < 0)
        throw parse_error("line 1: interval files need L and U columns");
    if (max_x < 1) throw parse_error("line 1: interval files need x1..xp columns");
    lay.x.resize(static_cast<std::size_t>(max_x));
    lay.z.resize(static_cast<std::size_t>(max_z));
    for (int c : lay.x)
        if (c < 0) throw parse_error("line 1: covariate columns must be x1..xp");
    for (int c : lay.z)
        if (c < 0) throw parse_error("line 1: instrument columns must be z1..zp");
    if (max_z > 0 && max_z != max_x)
        throw parse_error("line 1: instruments must match the covariate count");
    return lay;
}

}  // namespace detail

/// Reads the interval dataset format: UTF-8 CSV with a header row naming
/// columns L, U, x1..xp and optionally t (0/1 missingness), e (known
/// propensity scores), z1..zp (instruments).
inline RegressionDataset read_interval_csv(const std::filesystem::path& path) {
    std::istringstream in(detail::read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty dataset file");
    const detail::CsvLayout lay = detail::parse_interval_header(detail::split_csv_line(line));

    std::vector<ConvexBody> bodies;
    std::vector<std::vector<double>> xs, zs;
    std::vector<double> ts, es;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != lay.x.size() + lay.z.size() + 2 + (lay.t >= 0) + (lay.e >= 0))
            throw parse_error("line " + std::to_string(line_no) + ": wrong field count");
        const double lo = detail::parse_double(fields[static_cast<std::size_t>(lay.lower)], line_no);
        const double hi = detail::parse_double(fields[static_cast<std::size_t>(lay.upper)], line_no);
        try {
            bodies.emplace_back(Interval(lo, hi));
        } catch (const geometry_error& err) {
            throw geometry_error("line " + std::to_string(line_no) + ": " + err.what());
        }
        std::vector<double> xrow;
        for (int c : lay.x)
            xrow.push_back(detail::parse_double(fields[static_cast<std::size_t>(c)], line_no));
        xs.push_back(std::move(xrow));
        if (lay.t >= 0)
            ts.push_back(detail::parse_double(fields[static_cast<std::size_t>(lay.t)], line_no));
        if (lay.e >= 0)
            es.push_back(detail::parse_double(fields[static_cast<std::size_t>(lay.e)], line_no));
        if (!lay.z.empty()) {
            std::vector<double> zrow;
            for (int c : lay.z)
                zrow.push_back(detail::parse_double(fields[static_cast<std::size_t>(c)], line_no));
            zs.push_back(std::move(zrow));
        }
    }
    if (bodies.empty()) throw parse_error("dataset has no data rows");

    const auto n = static_cast<Eigen::Index>(bodies.size());
    const auto p = static_cast<Eigen::Index>(lay.x.size());
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            X(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    std::optional<Eigen::VectorXd> t_vec, e_vec;
    std::optional<Eigen::MatrixXd> z_mat;
    if (lay.t >= 0) {
        Eigen::VectorXd t(n);
        for (Eigen::Index i = 0; i < n; ++i) t(i) = ts[static_cast<std::size_t>(i)];
        t_vec = std::move(t);
    }
    if (lay.e >= 0) {
        Eigen::VectorXd e(n);
        for (Eigen::Index i = 0; i < n; ++i) e(i) = es[static_cast<std::size_t>(i)];
        e_vec = std::move(e);
    }
    if (!lay.z.empty()) {
        Eigen::MatrixXd Z(n, p);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j)
                Z(i, j) = zs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        z_mat = std::move(Z);
    }
    try {
        return RegressionDataset(std::move(bodies), std::move(X), std::move(t_vec),
                                 std::move(z_mat), std::move(e_vec));
    } catch (const geometry_error& err) {
        throw geometry_error(path.string() + ": " + err.what());
    }
}

/// Reads the polygon dataset format: one JSON object per line with fields
/// "vertices" (counter-clockwise [x, y] pairs), "x", and optional "t", "e",
/// "z".
inline RegressionDataset read_polygon_jsonl(const std::filesystem::path& path) {
    std::istringstream in(detail::read_file(path));
    std::string line;
    std::vector<ConvexBody> bodies;
    std::vector<std::vector<double>> xs, zs;
    std::vector<double> ts, es;
    bool any_t = false, any_e = false, any_z = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
            if (!row.contains("vertices") || !row.contains("x"))
                throw parse_error("objects need 'vertices' and 'x'");
            std::vector<Vec2> vs;
            for (const auto& v : row["vertices"])
                vs.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
            xs.push_back(row["x"].get<std::vector<double>>());
            if (row.contains("t")) {
                ts.push_back(row["t"].get<double>());
                any_t = true;
            }
            if (row.contains("e")) {
                es.push_back(row["e"].get<double>());
                any_e = true;
            }
            if (row.contains("z")) {
                zs.push_back(row["z"].get<std::vector<double>>());
                any_z = true;
            }
            try {
                bodies.emplace_back(Polygon(std::move(vs)));
            } catch (const geometry_error& err) {
                throw geometry_error("line " + std::to_string(line_no) + ": " + err.what());
            }
        } catch (const nlohmann::json::exception& err) {
            throw parse_error("line " + std::to_string(line_no) + ": " + err.what());
        } catch (const parse_error& err) {
            throw parse_error("line " + std::to_string(line_no) + ": " + err.what());
        }
    }
    if (bodies.empty()) throw parse_error("dataset has no data rows");
    const std::size_t n = bodies.size();
    if ((any_t && ts.size() != n) || (any_e && es.size() != n) || (any_z && zs.size() != n))
        throw parse_error("optional fields must appear on every line or none");

    const auto p = static_cast<Eigen::Index>(xs.front().size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), p);
    for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(xs[i].size()) != p)
            throw parse_error("covariate lengths differ between lines");
        for (Eigen::Index j = 0; j < p; ++j) X(static_cast<Eigen::Index>(i), j) = xs[i][static_cast<std::size_t>(j)];
    }
    std::optional<Eigen::VectorXd> t_vec, e_vec;
    std::optional<Eigen::MatrixXd> z_mat;
    if (any_t) {
        Eigen::VectorXd t(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) t(static_cast<Eigen::Index>(i)) = ts[i];
        t_vec = std::move(t);
    }
    if (any_e) {
        Eigen::VectorXd e(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) e(static_cast<Eigen::Index>(i)) = es[i];
        e_vec = std::move(e);
    }
    if (any_z) {
        Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), p);
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<Eigen::Index>(zs[i].size()) != p)
                throw parse_error("instrument lengths differ between lines");
            for (Eigen::Index j = 0; j < p; ++j)
                Z(static_cast<Eigen::Index>(i), j) = zs[i][static_cast<std::size_t>(j)];
        }
        z_mat = std::move(Z);
    }
    try {
        return RegressionDataset(std::move(bodies), std::move(X), std::move(t_vec),
                                 std::move(z_mat), std::move(e_vec));
    } catch (const geometry_error& err) {
        throw geometry_error(path.string() + ": " + err.what());
    }
}

inline nlohmann::json grid_to_json(const SphereGrid& grid) {
    return {{"dim", grid.dim()}, {"size", grid.size()}};
}

inline SphereGrid grid_from_json(const nlohmann::json& j) {
    const int dim = j.at("dim").get<int>();
    if (dim == 1) return SphereGrid::line();
    if (dim == 2) return SphereGrid::circle(j.at("size").get<std::size_t>());
    throw parse_error("grid dimension must be 1 or 2");
}

inline nlohmann::json body_to_json(const ConvexBody& body) {
    if (body.is_interval()) {
        return {{"kind", "interval"},
                {"lower", body.interval().lower()},
                {"upper", body.interval().upper()}};
    }
    if (body.is_polygon()) {
        nlohmann::json vs = nlohmann::json::array();
        for (const Vec2& v : body.polygon().vertices()) vs.push_back({v.x, v.y});
        return {{"kind", "polygon"}, {"vertices", vs}};
    }
    return {{"kind", "support"},
            {"grid", grid_to_json(body.support_body().grid())},
            {"values", body.support_body().values()}};
}

inline ConvexBody body_from_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "interval")
            return ConvexBody(Interval(j.at("lower").get<double>(), j.at("upper").get<double>()));
        if (kind == "polygon") {
            std::vector<Vec2> vs;
            for (const auto& v : j.at("vertices"))
                vs.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
            return ConvexBody(Polygon(std::move(vs)));
        }
        if (kind == "support")
            return ConvexBody(SupportBody(grid_from_json(j.at("grid")),
                                          j.at("values").get<std::vector<double>>()));
        throw parse_error("unknown body kind '" + kind + "'");
    } catch (const nlohmann::json::exception& err) {
        throw parse_error(std::string("bad body object: ") + err.what());
    }
}

/// Reads a body from a JSON file holding either a bare body object or a
/// result file with a "body" field.
inline ConvexBody read_body_file(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& err) {
        throw parse_error(path.string() + ": " + err.what());
    }
    return body_from_json(j.contains("body") ? j["body"] : j);
}

/// Standard result payload written by the estimator commands.
inline nlohmann::json result_json(const SphereGrid& grid, const SupportVector& values,
                                  const ConvexBody& body, bool in_cone, bool subset_flag,
                                  double weights_min) {
    return {{"grid", grid_to_json(grid)},
            {"support_values", values.values},
            {"body", body_to_json(body)},
            {"diagnostics",
             {{"in_cone", in_cone}, {"subset_flag", subset_flag}, {"weights_min", weights_min}}}};
}

inline SimConfig config_from_json(const nlohmann::json& j) {
    SimConfig cfg;
    try {
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.sample_sizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
        cfg.replications = j.at("replications").get<std::size_t>();
        const std::string dgp = j.at("dgp").get<std::string>();
        if (dgp == "interval-linear") cfg.dgp = DgpKind::interval_linear;
        else if (dgp == "polygon-linear") cfg.dgp = DgpKind::polygon_linear;
        else if (dgp == "mar-interval") cfg.dgp = DgpKind::mar_interval;
        else throw parse_error("unknown dgp '" + dgp + "'");

        auto vec = [&](const char* key) {
            const auto v = j.at(key).get<std::vector<double>>();
            return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                                     static_cast<Eigen::Index>(v.size()))
                .eval();
        };
        if (j.contains("grid_size")) cfg.grid_size = j["grid_size"].get<std::size_t>();
        if (j.contains("center_coef")) cfg.center_coef = vec("center_coef");
        if (j.contains("radius_coef")) cfg.radius_coef = vec("radius_coef");
        if (j.contains("radius_base")) cfg.radius_base = j["radius_base"].get<double>();
        if (j.contains("center_noise")) cfg.center_noise = j["center_noise"].get<double>();
        if (j.contains("radius_noise")) cfg.radius_noise = j["radius_noise"].get<double>();
        if (j.contains("propensity_coef")) cfg.propensity_coef = vec("propensity_coef");
        if (j.contains("propensity_step")) cfg.propensity_step = j["propensity_step"].get<bool>();
        if (j.contains("fit_propensity_model"))
            cfg.fit_propensity_model = j["fit_propensity_model"].get<bool>();
        if (j.contains("trim")) cfg.trim = j["trim"].get<double>();
        if (j.contains("center_matrix")) {
            const auto rows = j["center_matrix"].get<std::vector<std::vector<double>>>();
            if (rows.size() != 2) throw parse_error("center_matrix needs two rows");
            cfg.center_matrix.resize(2, static_cast<Eigen::Index>(rows[0].size()));
            for (int r = 0; r < 2; ++r) {
                if (rows[static_cast<std::size_t>(r)].size() != rows[0].size())
                    throw parse_error("center_matrix rows differ in length");
                for (std::size_t c = 0; c < rows[0].size(); ++c)
                    cfg.center_matrix(r, static_cast<Eigen::Index>(c)) =
                        rows[static_cast<std::size_t>(r)][c];
            }
        }
        if (j.contains("probe_points")) {
            for (const auto& row : j["probe_points"]) {
                const auto v = row.get<std::vector<double>>();
                cfg.probe_points.push_back(
                    Eigen::Map<const Eigen::VectorXd>(v.data(),
                                                      static_cast<Eigen::Index>(v.size()))
                        .eval());
            }
        }
    } catch (const nlohmann::json::exception& err) {
        throw parse_error(std::string("bad config: ") + err.what());
    }
    validate_config(cfg);
    return cfg;
}

inline SimConfig read_config_file(const std::filesystem::path& path) {
    try {
        return config_from_json(nlohmann::json::parse(detail::read_file(path)));
    } catch (const nlohmann::json::exception& err) {
        throw parse_error(path.string() + ": " + err.what());
    }
}

inline void write_rate_csv(const std::filesystem::path& path, const RateResult& result) {
    std::string out = "n,rep,error\n";
    for (std::size_t k = 0; k < result.n_values.size(); ++k)
        for (std::size_t r = 0; r < result.errors[k].size(); ++r)
            out += std::to_string(result.n_values[k]) + "," + std::to_string(r) + "," +
                   detail::format_double(result.errors[k][r]) + "\n";
    detail::write_file(path, out);
}

inline void write_rate_summary(const std::filesystem::path& path, const RateResult& result) {
    nlohmann::json j{{"n", result.n_values},
                     {"median_error", result.median_error},
                     {"mean_error", result.mean_error},
                     {"slope", result.slope},
                     {"slope_se", result.slope_se},
                     {"t_stat", result.t_stat}};
    detail::write_file(path, j.dump(2) + "\n");
}

inline void write_rate_plot(const std::filesystem::path& path, const RateResult& result) {
    std::string out = "log_n,log_median_error\n";
    for (std::size_t k = 0; k < result.n_values.size(); ++k)
        out += detail::format_double(std::log(static_cast<double>(result.n_values[k]))) +
               "," + detail::format_double(std::log(result.median_error[k])) + "\n";
    detail::write_file(path, out);
}

}  // namespace setstat
