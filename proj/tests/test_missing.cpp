#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "setstat/missing.hpp"
#include "setstat/rng.hpp"
#include "setstat/simulate.hpp"

using namespace setstat;
using Catch::Matchers::WithinAbs;

namespace {

// MAR draw: intervals around a linear center, logistic missingness in x.
RegressionDataset mar_draw(CounterRng& rng, int n, double gamma0, double gamma1) {
    std::vector<ConvexBody> bodies;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) {
        const double xi = rng.uniform(-2, 2);
        const double center = xi + 0.3 * rng.normal();
        x(i, 0) = xi;
        bodies.emplace_back(Interval(center - 1, center + 1));
        const double e = 1.0 / (1.0 + std::exp(-(gamma0 + gamma1 * xi)));
        t(i) = rng.bernoulli(e) ? 1.0 : 0.0;
    }
    return RegressionDataset(std::move(bodies), std::move(x), std::move(t));
}

}  // namespace

TEST_CASE("logistic fit recovers an independent missingness rate") {
    CounterRng rng(501);
    const int n = 5000;
    std::vector<ConvexBody> bodies;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) {
        bodies.emplace_back(Interval(0, 1));
        x(i, 0) = rng.uniform(-2, 2);
        t(i) = rng.bernoulli(0.7) ? 1.0 : 0.0;
    }
    const RegressionDataset data(std::move(bodies), std::move(x), std::move(t));
    const PropensityModel model = fit_propensity(data);
    REQUIRE(model.kind() == PropensityModel::Kind::logistic);
    CHECK_THAT(model.coefficients()(0), WithinAbs(std::log(0.7 / 0.3), 0.15));
    CHECK(std::abs(model.coefficients()(1)) < 0.1);
}

TEST_CASE("single-class indicators cannot be fit") {
    std::vector<ConvexBody> bodies(5, ConvexBody(Interval(0, 1)));
    Eigen::MatrixXd x(5, 1);
    x << 1, 2, 3, 4, 5;
    Eigen::VectorXd t = Eigen::VectorXd::Ones(5);
    const RegressionDataset data(std::move(bodies), std::move(x), std::move(t));
    CHECK_THROWS_AS(fit_propensity(data), numerical_error);
}

TEST_CASE("known scores pass through except for clipping") {
    const PropensityModel model = PropensityModel::known({0.5, 0.7, 0.01, 0.999}, 0.05);
    CHECK(model.known_scores()[0] == 0.5);
    CHECK(model.known_scores()[1] == 0.7);
    CHECK(model.known_scores()[2] == 0.05);   // clipped up to the trim level
    CHECK(model.known_scores()[3] == 0.95);   // clipped down
    CHECK_THROWS_AS(PropensityModel::known({0.5}, 0.0), numerical_error);
    CHECK_THROWS_AS(PropensityModel::known({0.5}, 0.5), numerical_error);
}

TEST_CASE("fully observed data reduce to the sample mean") {
    CounterRng rng(502);
    const SphereGrid line = SphereGrid::line();
    const int n = 20;
    std::vector<ConvexBody> bodies;
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) {
        bodies.emplace_back(oracles::random_interval(rng));
        x(i, 0) = rng.uniform(-2, 2);
    }
    const RegressionDataset data(bodies, x, Eigen::VectorXd::Ones(n));
    const PropensityModel model =
        PropensityModel::known(std::vector<double>(n, 1.0), 0.05);
    // constant clipped scores cancel under self-normalization
    const ConvexBody got = ipw_frechet_mean(data, model, line);
    const ConvexBody want = sample_frechet_mean(bodies, line);
    REQUIRE(dkc_distance(got, want, line) == 0.0);
}

TEST_CASE("masked draws stay close to the full-data mean") {
    CounterRng rng(503);
    const SphereGrid line = SphereGrid::line();
    const RegressionDataset data = mar_draw(rng, 5000, 0.4, 0.8);
    const ConvexBody full = sample_frechet_mean(data.bodies(), line);
    const PropensityModel model = fit_propensity(data);
    const ConvexBody ipw = ipw_frechet_mean(data, model, line);
    CHECK(dkc_distance(ipw, full, line) < 0.1);
}

TEST_CASE("singleton outcomes match the scalar self-normalized estimator") {
    CounterRng rng(504);
    const SphereGrid line = SphereGrid::line();
    const int n = 400;
    std::vector<ConvexBody> bodies;
    std::vector<double> ys, ts, es;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) {
        const double xi = rng.uniform(-2, 2);
        const double yi = 2.0 * xi + rng.normal();
        const double e = 1.0 / (1.0 + std::exp(-(0.3 + 0.6 * xi)));
        x(i, 0) = xi;
        t(i) = rng.bernoulli(e) ? 1.0 : 0.0;
        bodies.emplace_back(Interval(yi, yi));
        ys.push_back(yi);
        ts.push_back(t(i));
        es.push_back(std::clamp(e, 0.05, 0.95));
    }
    const RegressionDataset data(std::move(bodies), std::move(x), std::move(t));
    const PropensityModel model = PropensityModel::known(es, 0.05);
    const ConvexBody got = ipw_frechet_mean(data, model, line);
    const double want = oracles::scalar_hajek(ys, ts, es);
    CHECK_THAT(got.interval().lower(), WithinAbs(want, 1e-12));
    CHECK_THAT(got.interval().upper(), WithinAbs(want, 1e-12));
}

TEST_CASE("self-normalization identity holds at the support level") {
    CounterRng rng(505);
    const SphereGrid line = SphereGrid::line();
    const RegressionDataset data = mar_draw(rng, 300, 0.2, 0.5);
    const PropensityModel model = fit_propensity(data);
    const IpwResult result = ipw_estimate(data, model, line);
    const std::vector<double> scores = model.scores_for(data);
    const Eigen::VectorXd& t = *data.missing();

    double mean_w = 0.0;
    std::vector<double> expect(2, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double w = t(static_cast<Eigen::Index>(i)) / scores[i];
        mean_w += w / static_cast<double>(data.size());
        const SupportVector s = to_support_vector(data.bodies()[i], line);
        expect[0] += w / static_cast<double>(data.size()) * s.values[0];
        expect[1] += w / static_cast<double>(data.size()) * s.values[1];
    }
    const SupportVector hs = to_support_vector(result.hajek, line);
    CHECK_THAT(hs.values[0], WithinAbs(expect[0] / mean_w, 1e-10));
    CHECK_THAT(hs.values[1], WithinAbs(expect[1] / mean_w, 1e-10));
    CHECK_THAT(result.mean_inverse_weight, WithinAbs(mean_w, 1e-12));

    const SupportVector us = to_support_vector(result.unnormalized, line);
    CHECK_THAT(us.values[0], WithinAbs(expect[0], 1e-12));
    CHECK_THAT(us.values[1], WithinAbs(expect[1], 1e-12));
}

TEST_CASE("error consistency under masking") {
    CounterRng rng(506);
    const SphereGrid line = SphereGrid::line();
    // population mean of [c - 1, c + 1] with E[c] = 0 is [-1, 1]
    const ConvexBody target(Interval(-1, 1));
    auto median_err = [&](int n) {
        std::vector<double> errs;
        for (int rep = 0; rep < 30; ++rep) {
            const RegressionDataset data = mar_draw(rng, n, 0.4, 0.8);
            const PropensityModel model = fit_propensity(data);
            errs.push_back(dkc_distance(ipw_frechet_mean(data, model, line), target, line));
        }
        std::sort(errs.begin(), errs.end());
        return 0.5 * (errs[14] + errs[15]);
    };
    const double err_small = median_err(500);
    const double err_large = median_err(8000);
    CHECK(err_large < err_small);
    CHECK(err_large < 0.5 * err_small);
}

TEST_CASE("all-missing data cannot be averaged") {
    std::vector<ConvexBody> bodies(5, ConvexBody(Interval(0, 1)));
    Eigen::MatrixXd x(5, 1);
    x << 1, 2, 3, 4, 5;
    const RegressionDataset data(std::move(bodies), std::move(x),
                                 Eigen::VectorXd::Zero(5));
    CHECK_THROWS_AS(
        ipw_frechet_mean(data, PropensityModel::known(std::vector<double>(5, 0.5)),
                         SphereGrid::line()),
        numerical_error);
}

TEST_CASE("geodesic scaling endpoints") {
    const SphereGrid line = SphereGrid::line();
    const ConvexBody f(Interval(1, 6));
    const ConvexBody zero = geodesic_scale(f, 0.0, line);
    CHECK(zero.interval().lower() == 0.0);
    CHECK(zero.interval().upper() == 0.0);
    const ConvexBody same = geodesic_scale(f, 1.0, line);
    CHECK(same.interval().lower() == 1.0);
    CHECK(same.interval().upper() == 6.0);
    const ConvexBody doubled = geodesic_scale(f, 1.0 / 0.5, line);
    CHECK(doubled.interval().lower() == 2.0);
    CHECK(doubled.interval().upper() == 12.0);
    CHECK_THROWS_AS(geodesic_scale(f, -0.5, line), geometry_error);

    const SphereGrid circ = SphereGrid::circle(16);
    const ConvexBody sq(Polygon({{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}));
    const ConvexBody scaled = geodesic_scale(sq, 2.5, circ);
    const SupportVector a = to_support_vector(sq, circ);
    const SupportVector b = to_support_vector(scaled, circ);
    for (std::size_t i = 0; i < circ.size(); ++i)
        CHECK_THAT(b.values[i], WithinAbs(2.5 * a.values[i], 1e-12));
}
