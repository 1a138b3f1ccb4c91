#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "setstat/errors.hpp"

namespace setstat {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double t, Vec2 v) { return {t * v.x, t * v.y}; }
    friend Vec2 operator-(Vec2 v) { return {-v.x, -v.y}; }
    friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Antipodally symmetric quadrature grid on the unit sphere S^{d-1}, d in {1, 2}.
///
/// d = 1 is exactly {-1, +1} with unit weights, so squared norms are
/// g(-1)^2 + g(1)^2.  d = 2 is m equally spaced angles (m even, >= 8)
/// with equal weights 2*pi/m.
class SphereGrid {
public:
    static SphereGrid line() {
        SphereGrid g;
        g.dim_ = 1;
        g.directions_ = {{-1.0, 0.0}, {1.0, 0.0}};
        g.weights_ = {1.0, 1.0};
        g.antipode_ = {1, 0};
        g.angles_ = {};
        return g;
    }

    static SphereGrid circle(std::size_t m = 256) {
        if (m < 8 || m % 2 != 0)
            throw geometry_error("circle grid requires an even size of at least 8");
        SphereGrid g;
        g.dim_ = 2;
        g.directions_.reserve(m);
        g.angles_.reserve(m);
        const double step = 2.0 * std::numbers::pi / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double theta = step * static_cast<double>(i);
            g.angles_.push_back(theta);
            g.directions_.push_back({std::cos(theta), std::sin(theta)});
        }
        g.weights_.assign(m, step);
        g.antipode_.resize(m);
        for (std::size_t i = 0; i < m; ++i) g.antipode_[i] = (i + m / 2) % m;
        return g;
    }

    int dim() const { return dim_; }
    std::size_t size() const { return directions_.size(); }
    const std::vector<Vec2>& directions() const { return directions_; }
    Vec2 direction(std::size_t i) const { return directions_[i]; }
    const std::vector<double>& weights() const { return weights_; }
    double weight(std::size_t i) const { return weights_[i]; }
    std::size_t antipode(std::size_t i) const { return antipode_[i]; }

    /// Angle of direction i; meaningful for dim() == 2 only.
    double angle(std::size_t i) const { return angles_[i]; }

    /// Total measure of the sphere: 2 for d=1, 2*pi for d=2.
    double sphere_volume() const {
        return dim_ == 1 ? 2.0 : 2.0 * std::numbers::pi;
    }

    /// Index of the grid direction matching p within tol, or throws.
    std::size_t nearest_direction(Vec2 p, double tol = 1e-9) const {
        std::size_t best = 0;
        double best_dist = norm(p - directions_[0]);
        for (std::size_t i = 1; i < directions_.size(); ++i) {
            const double d = norm(p - directions_[i]);
            if (d < best_dist) {
                best_dist = d;
                best = i;
            }
        }
        if (best_dist > tol)
            throw geometry_error("direction does not match any grid direction");
        return best;
    }

    friend bool operator==(const SphereGrid& a, const SphereGrid& b) {
        return a.dim_ == b.dim_ && a.directions_ == b.directions_ &&
               a.weights_ == b.weights_;
    }

private:
    SphereGrid() = default;

    int dim_ = 1;
    std::vector<Vec2> directions_;
    std::vector<double> weights_;
    std::vector<std::size_t> antipode_;
    std::vector<double> angles_;
};

}  // namespace setstat
