#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "setstat/cone.hpp"
#include "setstat/convex_body.hpp"
#include "setstat/errors.hpp"
#include "setstat/geometry.hpp"
#include "setstat/sphere_grid.hpp"
#include "setstat/support_vector.hpp"

namespace setstat {

/// Paired observations (F_i, X_i) with optional missingness indicators,
/// instruments, and user-supplied propensity scores.
class RegressionDataset {
public:
    RegressionDataset(std::vector<ConvexBody> bodies, Eigen::MatrixXd covariates,
                      std::optional<Eigen::VectorXd> missing = {},
                      std::optional<Eigen::MatrixXd> instruments = {},
                      std::optional<Eigen::VectorXd> propensity_scores = {})
        : bodies_(std::move(bodies)),
          covariates_(std::move(covariates)),
          missing_(std::move(missing)),
          instruments_(std::move(instruments)),
          propensity_scores_(std::move(propensity_scores)) {
        const auto n = static_cast<Eigen::Index>(bodies_.size());
        if (n == 0) throw geometry_error("dataset has no observations");
        if (covariates_.rows() != n)
            throw geometry_error("covariate rows do not match the number of bodies");
        if (!covariates_.allFinite())
            throw geometry_error("covariates must be finite");
        const int dim = bodies_.front().dim();
        for (const ConvexBody& b : bodies_)
            if (b.dim() != dim) throw geometry_error("bodies have different dimensions");
        if (missing_) {
            if (missing_->size() != n)
                throw geometry_error("missingness indicator length does not match");
            for (Eigen::Index i = 0; i < n; ++i) {
                const double t = (*missing_)(i);
                if (t != 0.0 && t != 1.0)
                    throw geometry_error("missingness indicators must be 0 or 1");
            }
        }
        if (instruments_ && (instruments_->rows() != n ||
                             instruments_->cols() != covariates_.cols()))
            throw geometry_error("instruments must have the same shape as covariates");
        if (propensity_scores_ && propensity_scores_->size() != n)
            throw geometry_error("propensity score length does not match");
    }

    std::size_t size() const { return bodies_.size(); }
    int body_dim() const { return bodies_.front().dim(); }
    Eigen::Index covariate_dim() const { return covariates_.cols(); }
    const std::vector<ConvexBody>& bodies() const { return bodies_; }
    const Eigen::MatrixXd& covariates() const { return covariates_; }
    const std::optional<Eigen::VectorXd>& missing() const { return missing_; }
    const std::optional<Eigen::MatrixXd>& instruments() const { return instruments_; }
    const std::optional<Eigen::VectorXd>& propensity_scores() const {
        return propensity_scores_;
    }

private:
    std::vector<ConvexBody> bodies_;
    Eigen::MatrixXd covariates_;
    std::optional<Eigen::VectorXd> missing_;
    std::optional<Eigen::MatrixXd> instruments_;
    std::optional<Eigen::VectorXd> propensity_scores_;
};

struct DistributionAtom {
    double probability;
    ConvexBody body;
    Eigen::VectorXd covariate;
};

/// Finitely supported joint law of (F, X).
class DiscreteSetDistribution {
public:
    explicit DiscreteSetDistribution(std::vector<DistributionAtom> atoms)
        : atoms_(std::move(atoms)) {
        if (atoms_.empty()) throw geometry_error("distribution has no atoms");
        double total = 0.0;
        const int dim = atoms_.front().body.dim();
        const Eigen::Index p = atoms_.front().covariate.size();
        for (const DistributionAtom& a : atoms_) {
            if (a.probability < 0.0)
                throw geometry_error("atom probabilities must be nonnegative");
            if (a.body.dim() != dim)
                throw geometry_error("atom bodies have different dimensions");
            if (a.covariate.size() != p)
                throw geometry_error("atom covariates have different lengths");
            total += a.probability;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw geometry_error("atom probabilities must sum to one");
    }

    const std::vector<DistributionAtom>& atoms() const { return atoms_; }
    int body_dim() const { return atoms_.front().body.dim(); }
    Eigen::Index covariate_dim() const { return atoms_.front().covariate.size(); }

private:
    std::vector<DistributionAtom> atoms_;
};

namespace detail {

/// Term-major weighted accumulation of support values: acc_i += c_j psi_j(i)
/// with plain scalar multiplication, fixed left-to-right order.  This is the
/// Hilbert-space average; it differs from the signed Minkowski combination
/// when coefficients are negative.
inline SupportVector linear_support_average(const std::vector<ConvexBody>& bodies,
                                            const std::vector<double>& coefs,
                                            const SphereGrid& grid) {
    std::vector<double> acc(grid.size(), 0.0);
    for (std::size_t j = 0; j < bodies.size(); ++j) {
        const SupportVector s = to_support_vector(bodies[j], grid);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += coefs[j] * s.values[i];
    }
    return SupportVector(grid, std::move(acc));
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Sample Frechet mean under the support-function L2 metric; coincides with
/// the 1/n Minkowski mean, so no cone projection is needed.
inline ConvexBody sample_frechet_mean(const std::vector<ConvexBody>& bodies,
                                      const SphereGrid& grid) {
    if (bodies.empty()) throw geometry_error("mean of an empty body list");
    const double c = 1.0 / static_cast<double>(bodies.size());
    std::vector<double> coefs(bodies.size(), c);
    return reconstruct(detail::linear_support_average(bodies, coefs, grid));
}

/// Weighted Frechet mean: the weighted support average projected onto the
/// support cone.  Weights must average to one within 1e-8 (callers
/// normalize).  With all weights nonnegative the projection is the identity
/// and the result is the weighted Minkowski combination.
inline ConvexBody weighted_frechet_mean(const std::vector<ConvexBody>& bodies,
                                        const std::vector<double>& weights,
                                        const SphereGrid& grid) {
    if (bodies.empty()) throw geometry_error("mean of an empty body list");
    if (weights.size() != bodies.size())
        throw geometry_error("one weight per observation required");
    const double n = static_cast<double>(bodies.size());
    double mean_w = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w)) throw geometry_error("weights must be finite");
        mean_w += w / n;
    }
    if (std::abs(mean_w - 1.0) > 1e-8)
        throw numerical_error("weights must average to one");
    std::vector<double> coefs(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j) coefs[j] = weights[j] / n;
    return reconstruct(
        project_to_cone(detail::linear_support_average(bodies, coefs, grid)));
}

/// Per-group sample Frechet means, grouped by a key computed from each
/// covariate row.
template <class KeyFn>
auto conditional_frechet_mean(const RegressionDataset& data, const SphereGrid& grid,
                              KeyFn&& key)
    -> std::map<std::decay_t<std::invoke_result_t<KeyFn&, Eigen::RowVectorXd>>,
                ConvexBody> {
    using Key = std::decay_t<std::invoke_result_t<KeyFn&, Eigen::RowVectorXd>>;
    std::map<Key, std::vector<ConvexBody>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Eigen::RowVectorXd row = data.covariates().row(static_cast<Eigen::Index>(i));
        groups[key(row)].push_back(data.bodies()[i]);
    }
    std::map<Key, ConvexBody> out;
    for (const auto& [k, bodies] : groups)
        out.emplace(k, sample_frechet_mean(bodies, grid));
    return out;
}

enum class WeightMode { standard, eiv };

struct GfrPrediction {
    ConvexBody m_oplus;     // reconstruct(project(raw))
    SupportVector raw;      // weighted support average, possibly outside the cone
    bool in_cone;
    ConvexBody aumann_w;    // signed Minkowski combination companion
    bool subset_flag;       // m_oplus dominated by aumann_w at grid resolution
    double weights_min;     // smallest realized regression weight
};

/// Fitted global regression state: first and second covariate moments plus
/// cached per-observation support vectors, enabling prediction at any x.
class FittedGFR {
public:
    FittedGFR(const RegressionDataset& data, const SphereGrid& grid,
              WeightMode mode = WeightMode::standard)
        : grid_(grid), mode_(mode) {
        if (data.body_dim() != grid.dim())
            throw geometry_error("dataset and grid dimensions differ");
        if (mode == WeightMode::eiv && !data.instruments())
            throw numerical_error("errors-in-variables mode requires instruments");
        if (static_cast<Eigen::Index>(data.size()) < data.covariate_dim() + 2)
            throw numerical_error("fitting needs at least p + 2 observations");

        const auto n = static_cast<Eigen::Index>(data.size());
        const Eigen::MatrixXd& X = data.covariates();
        mean_covariate_ = X.colwise().mean();
        Eigen::MatrixXd Xc = X.rowwise() - mean_covariate_.transpose();
        if (mode == WeightMode::standard) {
            sigma_ = Xc.transpose() * Xc / static_cast<double>(n);
            sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
        } else {
            const Eigen::MatrixXd& Z = *data.instruments();
            Eigen::RowVectorXd zbar = Z.colwise().mean();
            Eigen::MatrixXd Zc = Z.rowwise() - zbar;
            sigma_ = Zc.transpose() * Xc / static_cast<double>(n);
            Eigen::MatrixXd sigma_w = Xc.transpose() * Xc / static_cast<double>(n);
            sigma_eps_ = sigma_w - 0.5 * (sigma_ + sigma_.transpose());
        }

        Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma_);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        condition_number_ = smin > 0.0 ? smax / smin
                                       : std::numeric_limits<double>::infinity();
        if (!(condition_number_ < 1e12))
            throw numerical_error("covariate covariance is singular or ill-conditioned");
        sigma_inverse_ = sigma_.fullPivLu().inverse();

        bodies_ = data.bodies();
        covariates_ = X;
        support_matrix_.resize(n, static_cast<Eigen::Index>(grid.size()));
        for (Eigen::Index j = 0; j < n; ++j) {
            const SupportVector s = to_support_vector(bodies_[static_cast<std::size_t>(j)], grid);
            for (std::size_t i = 0; i < s.values.size(); ++i)
                support_matrix_(j, static_cast<Eigen::Index>(i)) = s.values[i];
        }
    }

    const SphereGrid& grid() const { return grid_; }
    WeightMode mode() const { return mode_; }
    const Eigen::VectorXd& mean_covariate() const { return mean_covariate_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    const Eigen::MatrixXd& sigma_inverse() const { return sigma_inverse_; }
    double condition_number() const { return condition_number_; }
    const std::optional<Eigen::MatrixXd>& sigma_eps() const { return sigma_eps_; }
    const std::vector<ConvexBody>& bodies() const { return bodies_; }
    const Eigen::MatrixXd& covariates() const { return covariates_; }
    const Eigen::MatrixXd& support_matrix() const { return support_matrix_; }

    /// Realized regression weights w(x, X_i) = 1 + (x - mean)' Sigma^{-1} (X_i - mean).
    Eigen::VectorXd weights_at(const Eigen::VectorXd& x) const {
        if (x.size() != mean_covariate_.size())
            throw geometry_error("prediction point has the wrong length");
        const Eigen::VectorXd u = sigma_inverse_.transpose() * (x - mean_covariate_);
        const Eigen::MatrixXd Xc = covariates_.rowwise() - mean_covariate_.transpose();
        return Eigen::VectorXd::Ones(covariates_.rows()) + Xc * u;
    }

private:
    SphereGrid grid_;
    WeightMode mode_;
    Eigen::VectorXd mean_covariate_;
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd sigma_inverse_;
    double condition_number_ = 0.0;
    std::optional<Eigen::MatrixXd> sigma_eps_;
    std::vector<ConvexBody> bodies_;
    Eigen::MatrixXd covariates_;
    Eigen::MatrixXd support_matrix_;
};

inline FittedGFR gfr_fit(const RegressionDataset& data, const SphereGrid& grid,
                         WeightMode mode = WeightMode::standard) {
    return FittedGFR(data, grid, mode);
}

namespace detail {

inline GfrPrediction predict_from_weights(const std::vector<ConvexBody>& bodies,
                                          const std::vector<double>& coefs,
                                          const std::vector<double>& raw_weights,
                                          const SphereGrid& grid) {
    double total = 0.0;
    for (double c : coefs) total += c;
    if (std::abs(total - 1.0) > 1e-8)
        throw numerical_error("regression weights failed to average to one");

    SupportVector raw = linear_support_average(bodies, coefs, grid);
    const bool in_cone = is_support_vector(raw, 1e-9);
    ConvexBody m_oplus = reconstruct(project_to_cone(raw));

    std::vector<std::pair<double, ConvexBody>> terms;
    terms.reserve(bodies.size());
    for (std::size_t j = 0; j < bodies.size(); ++j) terms.emplace_back(coefs[j], bodies[j]);
    ConvexBody aumann = minkowski_combine(terms, grid);

    const bool subset = is_subset(m_oplus, aumann, grid, 1e-9);
    double wmin = raw_weights.empty() ? 1.0 : raw_weights[0];
    for (double w : raw_weights) wmin = std::min(wmin, w);
    return GfrPrediction{std::move(m_oplus), std::move(raw), in_cone, std::move(aumann),
                         subset, wmin};
}

}  // namespace detail

/// Global regression prediction at x: the weighted support average projected
/// onto the cone, together with the signed Minkowski companion and
/// diagnostics.
inline GfrPrediction gfr_predict(const FittedGFR& fit, const Eigen::VectorXd& x) {
    const Eigen::VectorXd w = fit.weights_at(x);
    const double n = static_cast<double>(fit.bodies().size());
    std::vector<double> coefs(fit.bodies().size());
    std::vector<double> raw_weights(fit.bodies().size());
    for (std::size_t j = 0; j < coefs.size(); ++j) {
        raw_weights[j] = w(static_cast<Eigen::Index>(j));
        coefs[j] = raw_weights[j] / n;
    }
    return detail::predict_from_weights(fit.bodies(), coefs, raw_weights, fit.grid());
}

/// Population regression record for a finitely supported law, using exact
/// moments mu = sum pi_k x_k and Sigma = sum pi_k (x_k - mu)(x_k - mu)'.
inline GfrPrediction population_gfr(const DiscreteSetDistribution& dist,
                                    const Eigen::VectorXd& x, const SphereGrid& grid) {
    if (dist.body_dim() != grid.dim())
        throw geometry_error("distribution and grid dimensions differ");
    if (x.size() != dist.covariate_dim())
        throw geometry_error("prediction point has the wrong length");
    const auto& atoms = dist.atoms();
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(x.size());
    for (const auto& a : atoms) mu += a.probability * a.covariate;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(x.size(), x.size());
    for (const auto& a : atoms) {
        const Eigen::VectorXd c = a.covariate - mu;
        sigma += a.probability * c * c.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
    const double smin = svd.singularValues().minCoeff();
    if (smin <= 0.0 || svd.singularValues().maxCoeff() / smin >= 1e12)
        throw numerical_error("population covariance is singular");
    const Eigen::VectorXd u = sigma.fullPivLu().solve(x - mu);

    std::vector<ConvexBody> bodies;
    std::vector<double> coefs(atoms.size());
    std::vector<double> raw_weights(atoms.size());
    bodies.reserve(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        bodies.push_back(atoms[k].body);
        raw_weights[k] = 1.0 + (atoms[k].covariate - mu).dot(u);
        coefs[k] = atoms[k].probability * raw_weights[k];
    }
    return detail::predict_from_weights(bodies, coefs, raw_weights, grid);
}

struct BlpTheta {
    ConvexBody theta0;
    std::vector<ConvexBody> theta1;
};

/// Set-valued best linear predictor coefficients: theta0 is the sample
/// Frechet mean, theta1_j the Sigma^{-1}-weighted signed Minkowski
/// combinations of (X_{ik} - mean_k) F_i.
inline BlpTheta blp_theta(const FittedGFR& fit) {
    if (fit.mode() != WeightMode::standard)
        throw numerical_error("best linear predictor requires standard weights");
    const auto& bodies = fit.bodies();
    const double n = static_cast<double>(bodies.size());
    const Eigen::MatrixXd Xc =
        fit.covariates().rowwise() - fit.mean_covariate().transpose();
    const Eigen::Index p = fit.covariates().cols();

    ConvexBody theta0 = sample_frechet_mean(bodies, fit.grid());

    std::vector<ConvexBody> cross_terms;
    cross_terms.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) {
        std::vector<std::pair<double, ConvexBody>> terms;
        terms.reserve(bodies.size());
        for (std::size_t j = 0; j < bodies.size(); ++j)
            terms.emplace_back(Xc(static_cast<Eigen::Index>(j), k) / n, bodies[j]);
        cross_terms.push_back(minkowski_combine(terms, fit.grid()));
    }
    std::vector<ConvexBody> theta1;
    theta1.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        std::vector<std::pair<double, ConvexBody>> terms;
        for (Eigen::Index k = 0; k < p; ++k)
            terms.emplace_back(fit.sigma_inverse()(j, k),
                               cross_terms[static_cast<std::size_t>(k)]);
        theta1.push_back(minkowski_combine(terms, fit.grid()));
    }
    return BlpTheta{std::move(theta0), std::move(theta1)};
}

/// Splits [min, max] of the values into k equal-width right-closed bins and
/// maps each value to its bin interval; the maximum lands in the top bin.
inline std::vector<Interval> five_interval_outcome(const std::vector<double>& values,
                                                   int k = 5) {
    if (k < 1) throw parse_error("bin count must be at least 1");
    if (values.empty()) throw parse_error("cannot bin an empty value list");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        if (!std::isfinite(v)) throw parse_error("values must be finite");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi) throw numerical_error("values have zero-width support");
    const double width = (hi - lo) / static_cast<double>(k);
    std::vector<Interval> out;
    out.reserve(values.size());
    for (double v : values) {
        const double r = (v - lo) / width;
        auto idx = static_cast<long>(std::ceil(r)) - 1;
        idx = std::clamp(idx, 0L, static_cast<long>(k) - 1);
        const double a = lo + width * static_cast<double>(idx);
        const double b = idx == k - 1 ? hi : lo + width * static_cast<double>(idx + 1);
        out.emplace_back(a, b);
    }
    return out;
}

}  // namespace setstat
