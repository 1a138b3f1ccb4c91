#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "setstat/errors.hpp"
#include "setstat/frechet.hpp"
#include "setstat/geometry.hpp"

namespace setstat {

/// Propensity scores for missing-at-random outcomes: either user-supplied
/// ("known") or a fitted logistic model.  Scores are always clipped to
/// [trim, 1 - trim].
class PropensityModel {
public:
    enum class Kind { known, logistic };

    static PropensityModel known(std::vector<double> scores, double trim = 0.05) {
        check_trim(trim);
        PropensityModel m;
        m.kind_ = Kind::known;
        m.trim_ = trim;
        for (double& s : scores) {
            if (!std::isfinite(s)) throw numerical_error("propensity scores must be finite");
            s = std::clamp(s, trim, 1.0 - trim);
        }
        m.scores_ = std::move(scores);
        return m;
    }

    static PropensityModel logistic(Eigen::VectorXd coefficients, double trim = 0.05) {
        check_trim(trim);
        PropensityModel m;
        m.kind_ = Kind::logistic;
        m.trim_ = trim;
        m.coefficients_ = std::move(coefficients);
        return m;
    }

    Kind kind() const { return kind_; }
    double trim() const { return trim_; }
    const Eigen::VectorXd& coefficients() const { return coefficients_; }
    const std::vector<double>& known_scores() const { return scores_; }

    double score_at(const Eigen::VectorXd& x) const {
        if (kind_ != Kind::logistic)
            throw numerical_error("known-score models predict only at their own observations");
        if (x.size() + 1 != coefficients_.size())
            throw geometry_error("covariate length does not match propensity coefficients");
        double eta = coefficients_(0);
        for (Eigen::Index j = 0; j < x.size(); ++j) eta += coefficients_(j + 1) * x(j);
        return std::clamp(1.0 / (1.0 + std::exp(-eta)), trim_, 1.0 - trim_);
    }

    /// Clipped scores for every observation of the dataset.
    std::vector<double> scores_for(const RegressionDataset& data) const {
        if (kind_ == Kind::known) {
            if (scores_.size() != data.size())
                throw geometry_error("known scores do not match the dataset size");
            return scores_;
        }
        std::vector<double> out;
        out.reserve(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            out.push_back(score_at(
                data.covariates().row(static_cast<Eigen::Index>(i)).transpose()));
        return out;
    }

private:
    static void check_trim(double trim) {
        if (!(trim > 0.0 && trim < 0.5))
            throw numerical_error("trim must lie in (0, 1/2)");
    }

    Kind kind_ = Kind::known;
    double trim_ = 0.05;
    Eigen::VectorXd coefficients_;
    std::vector<double> scores_;
};

/// Logistic MLE of P(T = 1 | X) by damped Newton iterations with
/// step-halving, at most 100 steps, declared converged when the gradient
/// norm drops below 1e-8.
inline PropensityModel fit_propensity(const RegressionDataset& data, double trim = 0.05) {
    if (!data.missing())
        throw numerical_error("propensity fitting needs missingness indicators");
    if (static_cast<Eigen::Index>(data.size()) < data.covariate_dim() + 2)
        throw numerical_error("fitting needs at least p + 2 observations");
    const Eigen::VectorXd& t = *data.missing();
    const auto n = static_cast<Eigen::Index>(data.size());
    const double observed = t.sum();
    if (observed == 0.0 || observed == static_cast<double>(n))
        throw numerical_error("missingness indicator has a single class");

    const Eigen::Index p = data.covariate_dim();
    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = data.covariates();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    auto log_likelihood = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd eta = design * b;
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            // log(1 + e^eta) computed stably on both tails
            const double e = eta(i);
            const double log1pe = e > 0.0 ? e + std::log1p(std::exp(-e))
                                          : std::log1p(std::exp(e));
            ll += t(i) * e - log1pe;
        }
        return ll;
    };

    double ll = log_likelihood(beta);
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = design * beta;
        Eigen::VectorXd mu(n), wdiag(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
            wdiag(i) = mu(i) * (1.0 - mu(i));
        }
        const Eigen::VectorXd grad = design.transpose() * (t - mu);
        if (grad.norm() < 1e-8) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd hess =
            design.transpose() * wdiag.asDiagonal() * design;
        Eigen::LDLT<Eigen::MatrixXd> solver(hess);
        if (solver.info() != Eigen::Success)
            throw numerical_error("propensity design is rank deficient");
        const Eigen::VectorXd step = solver.solve(grad);
        double scale = 1.0;
        Eigen::VectorXd candidate = beta + step;
        double cand_ll = log_likelihood(candidate);
        // halve only on a genuine decrease; ties at rounding level are accepted
        const double slack = 1e-12 * (1.0 + std::abs(ll));
        int halvings = 0;
        while (cand_ll < ll - slack && halvings < 40) {
            scale *= 0.5;
            candidate = beta + scale * step;
            cand_ll = log_likelihood(candidate);
            ++halvings;
        }
        beta = candidate;
        ll = cand_ll;
    }
    if (!converged)
        throw numerical_error(
            "propensity fit did not converge (possible perfect separation)");
    return PropensityModel::logistic(beta, trim);
}

struct IpwResult {
    ConvexBody hajek;           // self-normalized estimator
    ConvexBody unnormalized;    // plain 1/n Minkowski combination of (T_i/e_i) F_i
    double mean_inverse_weight; // (1/n) sum T_i / e_i
    std::vector<double> scores;
};

/// Inverse-probability-weighted Frechet mean of the observed bodies, in both
/// the self-normalized and unnormalized forms.
inline IpwResult ipw_estimate(const RegressionDataset& data, const PropensityModel& model,
                              const SphereGrid& grid) {
    if (!data.missing())
        throw numerical_error("inverse probability weighting needs missingness indicators");
    const Eigen::VectorXd& t = *data.missing();
    if (t.sum() == 0.0) throw numerical_error("all outcomes are missing");
    const std::vector<double> scores = model.scores_for(data);

    const double n = static_cast<double>(data.size());
    std::vector<double> weights(data.size());
    double mean_w = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double e = scores[i];
        if (e < model.trim() - 1e-12)
            throw numerical_error("propensity score below the trim level");
        weights[i] = t(static_cast<Eigen::Index>(i)) / e;
        mean_w += weights[i] / n;
    }

    std::vector<std::pair<double, ConvexBody>> terms;
    terms.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        terms.emplace_back(weights[i] / n, data.bodies()[i]);
    ConvexBody unnormalized = minkowski_combine(terms, grid);

    bool constant_weights = true;
    for (double w : weights) constant_weights = constant_weights && w == weights[0];
    std::vector<double> normalized(weights);
    for (double& w : normalized) w /= mean_w;
    // identical weights cancel under self-normalization; averaging directly
    // keeps the reduction to the sample mean exact
    ConvexBody hajek = constant_weights
                           ? sample_frechet_mean(data.bodies(), grid)
                           : weighted_frechet_mean(data.bodies(), normalized, grid);

    // Self-normalization identity: scaling the unnormalized combination by
    // 1/mean_w must reproduce the Hajek support vector.
    const SupportVector hs = to_support_vector(hajek, grid);
    const SupportVector us = to_support_vector(unnormalized, grid);
    for (std::size_t i = 0; i < hs.values.size(); ++i)
        if (std::abs(hs.values[i] - us.values[i] / mean_w) > 1e-10)
            throw numerical_error("self-normalization identity violated");

    return IpwResult{std::move(hajek), std::move(unnormalized), mean_w, scores};
}

inline ConvexBody ipw_frechet_mean(const RegressionDataset& data,
                                   const PropensityModel& model, const SphereGrid& grid) {
    return ipw_estimate(data, model, grid).hajek;
}

/// Endpoint of the extended geodesic from {0} through the body at parameter
/// rho: scalar set scaling, support values multiplied by rho.
inline ConvexBody geodesic_scale(const ConvexBody& body, double rho,
                                 const SphereGrid& grid) {
    if (!(rho >= 0.0)) throw geometry_error("geodesic parameter must be nonnegative");
    if (body.dim() != grid.dim())
        throw geometry_error("body and grid dimensions differ");
    if (body.is_interval()) {
        const auto& iv = body.interval();
        return ConvexBody(Interval(rho * iv.lower(), rho * iv.upper()));
    }
    if (body.is_polygon()) {
        std::vector<Vec2> vs = body.polygon().vertices();
        for (Vec2& v : vs) v = rho * v;
        return ConvexBody(Polygon(std::move(vs)));
    }
    std::vector<double> values = body.support_body().values();
    for (double& v : values) v *= rho;
    return ConvexBody(SupportBody(body.support_body().grid(), std::move(values)));
}

}  // namespace setstat
