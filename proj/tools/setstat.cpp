// Command-line surface for set-valued statistics: sample means, global
// regression, inverse-probability weighting, metric queries, interval
// construction, and Monte Carlo rate experiments.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "setstat/setstat.hpp"

namespace {

using namespace setstat;

struct DatasetArgs {
    std::string input;
    std::string format;  // "", "interval", "polygon"
    std::size_t grid_size = 256;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
    cmd->add_option("--input", args.input, "dataset file")->required();
    cmd->add_option("--format", args.format, "interval|polygon (default: by extension)")
        ->check(CLI::IsMember({"interval", "polygon"}));
    cmd->add_option("--grid", args.grid_size, "circle grid size for planar bodies");
}

RegressionDataset load_dataset(const DatasetArgs& args) {
    std::string format = args.format;
    if (format.empty()) {
        const std::string ext = std::filesystem::path(args.input).extension().string();
        format = (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") ? "polygon"
                                                                         : "interval";
    }
    return format == "polygon" ? read_polygon_jsonl(args.input)
                               : read_interval_csv(args.input);
}

SphereGrid grid_for(const RegressionDataset& data, std::size_t grid_size) {
    return data.body_dim() == 1 ? SphereGrid::line() : SphereGrid::circle(grid_size);
}

Eigen::VectorXd parse_point(const std::string& text) {
    std::vector<double> parts;
    std::string field;
    try {
        for (char c : text + ",") {
            if (c == ',') {
                parts.push_back(detail::parse_double(field, 0));
                field.clear();
            } else {
                field += c;
            }
        }
    } catch (const parse_error&) {
        throw parse_error("bad --predict-at value '" + text + "'");
    }
    return Eigen::Map<const Eigen::VectorXd>(parts.data(),
                                             static_cast<Eigen::Index>(parts.size()));
}

void write_result(const std::string& path, const nlohmann::json& j) {
    detail::write_file(path, j.dump(2) + "\n");
}

int run_mean(const DatasetArgs& args, const std::string& output) {
    const RegressionDataset data = load_dataset(args);
    const SphereGrid grid = grid_for(data, args.grid_size);
    const ConvexBody mean = sample_frechet_mean(data.bodies(), grid);
    write_result(output, result_json(grid, to_support_vector(mean, grid), mean,
                                     /*in_cone=*/true, /*subset_flag=*/true,
                                     /*weights_min=*/1.0));
    return 0;
}

int run_gfr(const DatasetArgs& args, const std::string& predict_at, bool eiv,
            const std::string& output) {
    const RegressionDataset data = load_dataset(args);
    const SphereGrid grid = grid_for(data, args.grid_size);
    const FittedGFR fit(data, grid, eiv ? WeightMode::eiv : WeightMode::standard);
    const GfrPrediction pred = gfr_predict(fit, parse_point(predict_at));
    nlohmann::json j = result_json(grid, pred.raw, pred.m_oplus, pred.in_cone,
                                   pred.subset_flag, pred.weights_min);
    j["aumann"] = body_to_json(pred.aumann_w);
    write_result(output, j);
    return 0;
}

int run_ipw(const DatasetArgs& args, const std::string& propensity, double trim,
            const std::string& output) {
    const RegressionDataset data = load_dataset(args);
    if (!data.missing())
        throw parse_error("inverse probability weighting needs a t column");
    const SphereGrid grid = grid_for(data, args.grid_size);

    const bool fully_observed = data.missing()->minCoeff() == 1.0;
    PropensityModel model = [&] {
        if (propensity == "known") {
            if (!data.propensity_scores())
                throw parse_error("known propensity mode needs an e column");
            const Eigen::VectorXd& e = *data.propensity_scores();
            return PropensityModel::known(
                std::vector<double>(e.data(), e.data() + e.size()), trim);
        }
        if (fully_observed)  // nothing to reweight; unit scores cancel
            return PropensityModel::known(std::vector<double>(data.size(), 1.0), trim);
        return fit_propensity(data, trim);
    }();

    const IpwResult result = ipw_estimate(data, model, grid);
    double wmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.size(); ++i)
        wmin = std::min(wmin, (*data.missing())(static_cast<Eigen::Index>(i)) /
                                  result.scores[i]);
    nlohmann::json j = result_json(grid, to_support_vector(result.hajek, grid),
                                   result.hajek, /*in_cone=*/true, /*subset_flag=*/true,
                                   wmin);
    j["unnormalized"] = body_to_json(result.unnormalized);
    j["mean_inverse_weight"] = result.mean_inverse_weight;
    nlohmann::json prop{
        {"kind", fully_observed && propensity == "logistic" ? "none" : propensity},
        {"trim", model.trim()}};
    if (model.kind() == PropensityModel::Kind::logistic) {
        const Eigen::VectorXd& b = model.coefficients();
        prop["coefficients"] = std::vector<double>(b.data(), b.data() + b.size());
    }
    j["propensity"] = prop;
    write_result(output, j);
    return 0;
}

int run_dist(const std::string& metric, std::size_t grid_size, const std::string& file_a,
             const std::string& file_b) {
    const ConvexBody a = read_body_file(file_a);
    const ConvexBody b = read_body_file(file_b);
    require_same_dim(a, b);
    const SphereGrid grid =
        a.dim() == 1 ? SphereGrid::line() : SphereGrid::circle(grid_size);
    const double d = metric == "dkc" ? dkc_distance(a, b, grid)
                                     : hausdorff_distance(a, b, grid);
    std::printf("%.12g\n", d);
    return 0;
}

int run_simulate(const std::string& kind, const std::string& config_path,
                 const std::string& out_prefix) {
    const SimConfig cfg = read_config_file(config_path);
    const RateResult result = kind == "gfr-rate" ? run_gfr_rate_experiment(cfg)
                                                 : run_ipw_rate_experiment(cfg);
    write_rate_csv(out_prefix + ".csv", result);
    write_rate_summary(out_prefix + ".summary.json", result);
    write_rate_plot(out_prefix + ".plot.csv", result);
    std::printf("slope %.6g (se %.3g) over %zu sample sizes\n", result.slope,
                result.slope_se, result.n_values.size());
    return 0;
}

int run_intervals(const std::string& input, const std::string& outcome, int bins,
                  const std::string& output) {
    std::istringstream in(detail::read_file(input));
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty input file");
    const auto header = detail::split_csv_line(line);
    int y_col = -1;
    std::vector<std::pair<int, std::string>> x_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = detail::trim(header[c]);
        if (name == outcome) y_col = static_cast<int>(c);
        else x_cols.emplace_back(static_cast<int>(c), name);
    }
    if (y_col < 0) throw parse_error("no column named '" + outcome + "'");
    if (x_cols.empty()) throw parse_error("need at least one covariate column");

    std::vector<double> values;
    std::vector<std::vector<double>> covariates;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw parse_error("line " + std::to_string(line_no) + ": wrong field count");
        values.push_back(detail::parse_double(fields[static_cast<std::size_t>(y_col)], line_no));
        std::vector<double> row;
        for (const auto& [c, name] : x_cols)
            row.push_back(detail::parse_double(fields[static_cast<std::size_t>(c)], line_no));
        covariates.push_back(std::move(row));
    }
    const std::vector<Interval> intervals = five_interval_outcome(values, bins);

    std::string out = "L,U";
    for (std::size_t j = 0; j < x_cols.size(); ++j) out += ",x" + std::to_string(j + 1);
    out += "\n";
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        out += detail::format_double(intervals[i].lower()) + "," +
               detail::format_double(intervals[i].upper());
        for (double v : covariates[i]) out += "," + detail::format_double(v);
        out += "\n";
    }
    detail::write_file(output, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"statistics for set-valued data via support functions"};
    app.require_subcommand(1);

    DatasetArgs mean_args;
    std::string mean_output;
    CLI::App* mean_cmd = app.add_subcommand("mean", "sample Frechet (Minkowski) mean");
    add_dataset_options(mean_cmd, mean_args);
    mean_cmd->add_option("--output", mean_output, "result JSON path")->required();

    DatasetArgs gfr_args;
    std::string gfr_predict, gfr_output;
    bool gfr_eiv = false;
    CLI::App* gfr_cmd = app.add_subcommand("gfr", "global Frechet regression");
    add_dataset_options(gfr_cmd, gfr_args);
    gfr_cmd->add_option("--predict-at", gfr_predict, "comma-separated covariate point")
        ->required();
    gfr_cmd->add_flag("--eiv", gfr_eiv, "use instrument cross-covariance weights");
    gfr_cmd->add_option("--output", gfr_output, "result JSON path")->required();

    DatasetArgs ipw_args;
    std::string ipw_propensity = "logistic", ipw_output;
    double ipw_trim = 0.05;
    CLI::App* ipw_cmd =
        app.add_subcommand("ipw", "inverse-probability-weighted Frechet mean");
    add_dataset_options(ipw_cmd, ipw_args);
    ipw_cmd->add_option("--propensity", ipw_propensity, "logistic|known")
        ->check(CLI::IsMember({"logistic", "known"}));
    ipw_cmd->add_option("--trim", ipw_trim, "propensity clipping level");
    ipw_cmd->add_option("--output", ipw_output, "result JSON path")->required();

    std::string dist_metric, dist_a, dist_b;
    std::size_t dist_grid = 256;
    CLI::App* dist_cmd = app.add_subcommand("dist", "distance between two bodies");
    dist_cmd->add_option("--metric", dist_metric, "dkc|hausdorff")
        ->required()
        ->check(CLI::IsMember({"dkc", "hausdorff"}));
    dist_cmd->add_option("--grid", dist_grid, "circle grid size for planar bodies");
    dist_cmd->add_option("a", dist_a, "first body JSON")->required();
    dist_cmd->add_option("b", dist_b, "second body JSON")->required();

    std::string sim_kind, sim_config, sim_out;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo rate experiments");
    sim_cmd->add_option("kind", sim_kind, "gfr-rate|ipw-rate")
        ->required()
        ->check(CLI::IsMember({"gfr-rate", "ipw-rate"}));
    sim_cmd->add_option("--config", sim_config, "experiment config JSON")->required();
    sim_cmd->add_option("--out", sim_out, "output path prefix")->required();

    std::string bin_input, bin_outcome = "y", bin_output;
    int bin_count = 5;
    CLI::App* bin_cmd = app.add_subcommand(
        "intervals", "bin a scalar outcome column into an interval dataset");
    bin_cmd->add_option("--input", bin_input, "CSV with an outcome column")->required();
    bin_cmd->add_option("--outcome", bin_outcome, "outcome column name");
    bin_cmd->add_option("--bins", bin_count, "number of equal-width bins");
    bin_cmd->add_option("--output", bin_output, "interval CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (mean_cmd->parsed()) return run_mean(mean_args, mean_output);
        if (gfr_cmd->parsed()) return run_gfr(gfr_args, gfr_predict, gfr_eiv, gfr_output);
        if (ipw_cmd->parsed()) return run_ipw(ipw_args, ipw_propensity, ipw_trim, ipw_output);
        if (dist_cmd->parsed()) return run_dist(dist_metric, dist_grid, dist_a, dist_b);
        if (sim_cmd->parsed()) return run_simulate(sim_kind, sim_config, sim_out);
        if (bin_cmd->parsed()) return run_intervals(bin_input, bin_outcome, bin_count, bin_output);
    } catch (const parse_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const geometry_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
