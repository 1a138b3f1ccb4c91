#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "setstat/errors.hpp"
#include "setstat/frechet.hpp"
#include "setstat/missing.hpp"
#include "setstat/rng.hpp"

namespace setstat {

enum class DgpKind { interval_linear, polygon_linear, mar_interval };

/// Monte Carlo experiment description.  Identical seed and configuration
/// reproduce identical output bit-exactly, independent of thread count.
struct SimConfig {
    std::uint64_t seed = 0;
    std::vector<std::size_t> sample_sizes;
    std::size_t replications = 10;
    DgpKind dgp = DgpKind::interval_linear;
    std::size_t grid_size = 256;       // circle grid resolution (d = 2)

    Eigen::VectorXd center_coef;       // interval center a'X
    Eigen::MatrixXd center_matrix;     // polygon center A X (2 x p)
    Eigen::VectorXd radius_coef;       // interval radius |b'X| contribution
    double radius_base = 1.0;
    double center_noise = 0.0;         // Gaussian sd added to centers
    double radius_noise = 0.0;         // half-normal scale added to radii

    Eigen::VectorXd propensity_coef;   // logistic truth (intercept first)
    bool propensity_step = false;      // misspecified truth: step in x_1
    bool fit_propensity_model = true;  // false: use the true scores as known
    double trim = 0.05;

    std::vector<Eigen::VectorXd> probe_points;
};

inline void validate_config(const SimConfig& cfg) {
    if (cfg.sample_sizes.empty()) throw parse_error("config needs sample sizes");
    for (std::size_t i = 1; i < cfg.sample_sizes.size(); ++i)
        if (cfg.sample_sizes[i] <= cfg.sample_sizes[i - 1])
            throw parse_error("sample sizes must be strictly increasing");
    if (cfg.replications < 10) throw parse_error("at least 10 replications required");
    if (!(cfg.radius_base >= 0.0) || !(cfg.center_noise >= 0.0) ||
        !(cfg.radius_noise >= 0.0))
        throw parse_error("noise scales and base radius must be nonnegative");

    if (cfg.dgp == DgpKind::polygon_linear) {
        if (cfg.center_matrix.rows() != 2 || cfg.center_matrix.cols() < 1)
            throw parse_error("polygon DGP needs a 2 x p center matrix");
    } else {
        if (cfg.center_coef.size() < 1)
            throw parse_error("interval DGPs need center coefficients");
        if (cfg.radius_coef.size() != cfg.center_coef.size())
            throw parse_error("radius coefficients must match the covariate length");
        if (cfg.center_coef.size() > 1 && cfg.radius_coef.norm() > 0.0)
            throw parse_error(
                "covariate-dependent radii are supported for one covariate only");
    }
    if (cfg.dgp == DgpKind::mar_interval) {
        if (!cfg.propensity_step &&
            cfg.propensity_coef.size() != cfg.center_coef.size() + 1)
            throw parse_error("propensity coefficients must have length p + 1");
        if (!(cfg.trim > 0.0 && cfg.trim < 0.5))
            throw parse_error("trim must lie in (0, 1/2)");
    } else {
        if (cfg.probe_points.empty())
            throw parse_error("rate experiments need probe points");
        const Eigen::Index p = cfg.dgp == DgpKind::polygon_linear
                                   ? cfg.center_matrix.cols()
                                   : cfg.center_coef.size();
        for (const auto& x : cfg.probe_points)
            if (x.size() != p) throw parse_error("probe point has the wrong length");
    }
}

namespace detail {

inline Eigen::Index dgp_covariate_dim(const SimConfig& cfg) {
    return cfg.dgp == DgpKind::polygon_linear ? cfg.center_matrix.cols()
                                              : cfg.center_coef.size();
}

inline CounterRng job_rng(const SimConfig& cfg, std::size_t n, std::size_t rep) {
    return CounterRng(cfg.seed)
        .fork((static_cast<std::uint64_t>(n) << 32) |
              static_cast<std::uint64_t>(rep));
}

inline double true_propensity(const SimConfig& cfg, const Eigen::VectorXd& x) {
    if (cfg.propensity_step) return x(0) > 0.0 ? 0.75 : 0.25;
    double eta = cfg.propensity_coef(0);
    for (Eigen::Index j = 0; j < x.size(); ++j)
        eta += cfg.propensity_coef(j + 1) * x(j);
    return 1.0 / (1.0 + std::exp(-eta));
}

}  // namespace detail

constexpr double half_normal_mean = 0.7978845608028654;  // sqrt(2/pi)

/// Interval outcomes linear in the covariates: centers a'X + noise, radii
/// r0 + |b'X| + half-normal noise, X uniform on [-2, 2]^p.
inline RegressionDataset generate_interval_dgp(const SimConfig& cfg, std::size_t n,
                                               std::size_t rep) {
    validate_config(cfg);
    if (cfg.dgp == DgpKind::polygon_linear)
        throw parse_error("interval generator called with a polygon configuration");
    const Eigen::Index p = cfg.center_coef.size();
    CounterRng rng = detail::job_rng(cfg, n, rep);

    std::vector<ConvexBody> bodies;
    bodies.reserve(n);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), p);
    const bool mar = cfg.dgp == DgpKind::mar_interval;
    Eigen::VectorXd t_ind(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd x(p);
        for (Eigen::Index j = 0; j < p; ++j) x(j) = rng.uniform(-2.0, 2.0);
        X.row(static_cast<Eigen::Index>(i)) = x.transpose();
        const double center = cfg.center_coef.dot(x) + cfg.center_noise * rng.normal();
        const double radius = cfg.radius_base + std::abs(cfg.radius_coef.dot(x)) +
                              cfg.radius_noise * std::abs(rng.normal());
        bodies.emplace_back(Interval(center - radius, center + radius));
        if (mar)
            t_ind(static_cast<Eigen::Index>(i)) =
                rng.bernoulli(detail::true_propensity(cfg, x)) ? 1.0 : 0.0;
    }
    if (mar)
        return RegressionDataset(std::move(bodies), std::move(X), std::move(t_ind));
    return RegressionDataset(std::move(bodies), std::move(X));
}

/// Polygon outcomes: a fixed unit square scaled by r0 + half-normal noise and
/// translated by A X + noise.
inline RegressionDataset generate_polygon_dgp(const SimConfig& cfg, std::size_t n,
                                              std::size_t rep) {
    validate_config(cfg);
    if (cfg.dgp != DgpKind::polygon_linear)
        throw parse_error("polygon generator called with an interval configuration");
    const Eigen::Index p = cfg.center_matrix.cols();
    CounterRng rng = detail::job_rng(cfg, n, rep);

    static const std::vector<Vec2> square{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
    std::vector<ConvexBody> bodies;
    bodies.reserve(n);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), p);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd x(p);
        for (Eigen::Index j = 0; j < p; ++j) x(j) = rng.uniform(-2.0, 2.0);
        X.row(static_cast<Eigen::Index>(i)) = x.transpose();
        const Eigen::Vector2d c = cfg.center_matrix * x +
                                  cfg.center_noise * Eigen::Vector2d(rng.normal(), rng.normal());
        const double rho = cfg.radius_base + cfg.radius_noise * std::abs(rng.normal());
        std::vector<Vec2> vs;
        vs.reserve(square.size());
        for (const Vec2& v : square) vs.push_back({c(0) + rho * v.x, c(1) + rho * v.y});
        bodies.emplace_back(Polygon(std::move(vs)));
    }
    return RegressionDataset(std::move(bodies), std::move(X));
}

/// Closed-form population regression target for the interval DGPs.  Uses
/// E|X_j| = 1 for the uniform covariates and the half-normal radius mean;
/// valid because symmetric covariates make the weighted radius term constant
/// in x.
inline Interval population_interval_target(const SimConfig& cfg, const Eigen::VectorXd& x) {
    double radius = cfg.radius_base + cfg.radius_noise * half_normal_mean;
    if (cfg.radius_coef.size() == 1) radius += std::abs(cfg.radius_coef(0));
    const double center = cfg.center_coef.dot(x);
    return Interval(center - radius, center + radius);
}

/// Closed-form population target for the polygon DGP as a support vector on
/// the given grid.
inline SupportVector population_polygon_target(const SimConfig& cfg,
                                               const Eigen::VectorXd& x,
                                               const SphereGrid& grid) {
    const Eigen::Vector2d c = cfg.center_matrix * x;
    const double rho = cfg.radius_base + cfg.radius_noise * half_normal_mean;
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec2 p = grid.direction(i);
        values[i] = c(0) * p.x + c(1) * p.y + rho * (std::abs(p.x) + std::abs(p.y));
    }
    return SupportVector(grid, std::move(values));
}

/// Per-(n, replication) sup-over-probes errors with per-n medians/means and
/// the fitted log-log slope of the median error against n.
struct RateResult {
    std::vector<std::size_t> n_values;
    std::vector<std::vector<double>> errors;  // [n index][replication]
    std::vector<double> median_error;
    std::vector<double> mean_error;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double slope_se = std::numeric_limits<double>::quiet_NaN();
    double t_stat = std::numeric_limits<double>::quiet_NaN();
};

inline std::size_t thread_budget() {
    if (const char* env = std::getenv("SETSTAT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// Runs fn(0..count-1) across the thread budget.  Jobs write to disjoint
/// slots, so results do not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const std::size_t workers = std::min(thread_budget(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace detail {

inline void summarize(RateResult& result) {
    result.median_error.clear();
    result.mean_error.clear();
    for (const auto& reps : result.errors) {
        result.median_error.push_back(median_of(reps));
        double mean = 0.0;
        for (double e : reps) mean += e / static_cast<double>(reps.size());
        result.mean_error.push_back(mean);
    }
    const std::size_t k = result.n_values.size();
    if (k < 2) return;
    double su = 0.0, sv = 0.0;
    std::vector<double> u(k), v(k);
    for (std::size_t i = 0; i < k; ++i) {
        u[i] = std::log(static_cast<double>(result.n_values[i]));
        v[i] = std::log(result.median_error[i]);
        su += u[i] / static_cast<double>(k);
        sv += v[i] / static_cast<double>(k);
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (u[i] - su) * (u[i] - su);
        sxy += (u[i] - su) * (v[i] - sv);
    }
    result.slope = sxy / sxx;
    if (k > 2) {
        const double intercept = sv - result.slope * su;
        double rss = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double r = v[i] - intercept - result.slope * u[i];
            rss += r * r;
        }
        result.slope_se = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
        result.t_stat = result.slope / result.slope_se;
    }
}

template <class JobFn>
RateResult run_ladder(const SimConfig& cfg, JobFn&& job) {
    RateResult result;
    result.n_values = cfg.sample_sizes;
    result.errors.assign(cfg.sample_sizes.size(),
                         std::vector<double>(cfg.replications, 0.0));
    const std::size_t total = cfg.sample_sizes.size() * cfg.replications;
    parallel_for(total, [&](std::size_t flat) {
        const std::size_t k = flat / cfg.replications;
        const std::size_t r = flat % cfg.replications;
        result.errors[k][r] = job(cfg.sample_sizes[k], r);
    });
    summarize(result);
    return result;
}

}  // namespace detail

/// Fits the global regression on simulated data and measures the sup over
/// probe points of the support-function L2 distance to the closed-form
/// population target.
inline RateResult run_gfr_rate_experiment(const SimConfig& cfg) {
    validate_config(cfg);
    if (cfg.dgp == DgpKind::mar_interval)
        throw parse_error("regression rate experiment requires a regression DGP");
    const bool polygon = cfg.dgp == DgpKind::polygon_linear;
    const SphereGrid grid = polygon ? SphereGrid::circle(cfg.grid_size)
                                    : SphereGrid::line();

    return detail::run_ladder(cfg, [&](std::size_t n, std::size_t rep) {
        const RegressionDataset data = polygon ? generate_polygon_dgp(cfg, n, rep)
                                               : generate_interval_dgp(cfg, n, rep);
        const FittedGFR fit(data, grid);
        double worst = 0.0;
        for (const Eigen::VectorXd& x : cfg.probe_points) {
            const GfrPrediction pred = gfr_predict(fit, x);
            const SupportVector got = to_support_vector(pred.m_oplus, grid);
            const SupportVector want =
                polygon ? population_polygon_target(cfg, x, grid)
                        : to_support_vector(
                              ConvexBody(population_interval_target(cfg, x)), grid);
            worst = std::max(worst, weighted_distance(got, want));
        }
        return worst;
    });
}

/// Measures the distance between the inverse-probability-weighted mean and
/// the population Frechet mean across the sample-size ladder.
inline RateResult run_ipw_rate_experiment(const SimConfig& cfg) {
    validate_config(cfg);
    if (cfg.dgp != DgpKind::mar_interval)
        throw parse_error("missing-data rate experiment requires the MAR DGP");
    const SphereGrid grid = SphereGrid::line();
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(cfg.center_coef.size());
    const Interval target = population_interval_target(cfg, origin);
    const ConvexBody target_body{target};

    return detail::run_ladder(cfg, [&](std::size_t n, std::size_t rep) {
        const RegressionDataset data = generate_interval_dgp(cfg, n, rep);
        PropensityModel model = [&] {
            if (cfg.fit_propensity_model) return fit_propensity(data, cfg.trim);
            std::vector<double> scores;
            scores.reserve(data.size());
            for (std::size_t i = 0; i < data.size(); ++i)
                scores.push_back(detail::true_propensity(
                    cfg, data.covariates().row(static_cast<Eigen::Index>(i)).transpose()));
            return PropensityModel::known(std::move(scores), cfg.trim);
        }();
        const ConvexBody mean = ipw_frechet_mean(data, model, grid);
        return dkc_distance(mean, target_body, grid);
    });
}

}  // namespace setstat
