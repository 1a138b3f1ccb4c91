#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "setstat/cone.hpp"
#include "setstat/errors.hpp"
#include "setstat/sphere_grid.hpp"
#include "setstat/support_vector.hpp"

namespace setstat {

namespace detail {

/// Normalizes a closed vertex chain into a strictly convex counter-clockwise
/// list: deduplicates neighbors within dedup_tol, drops collinear middle
/// vertices (|cross| <= cross_tol with a forward turn), and either rejects or
/// drops vertices making right turns depending on reject_on_negative.
inline std::vector<Vec2> clean_convex_chain(std::vector<Vec2> vs, double dedup_tol,
                                            double cross_tol, bool reject_on_negative) {
    if (vs.empty()) throw geometry_error("polygon needs at least one vertex");
    for (const Vec2& v : vs)
        if (!std::isfinite(v.x) || !std::isfinite(v.y))
            throw geometry_error("polygon has non-finite vertices");

    auto dedup = [&](std::vector<Vec2>& w) {
        std::vector<Vec2> out;
        for (const Vec2& v : w) {
            if (out.empty() || norm(v - out.back()) > dedup_tol) out.push_back(v);
        }
        while (out.size() > 1 && norm(out.front() - out.back()) <= dedup_tol)
            out.pop_back();
        w = out;
    };
    dedup(vs);
    if (vs.size() <= 2) return vs;

    bool changed = true;
    while (changed && vs.size() > 2) {
        changed = false;
        const std::size_t k = vs.size();
        for (std::size_t i = 0; i < k; ++i) {
            const Vec2 prev = vs[(i + k - 1) % k];
            const Vec2 cur = vs[i];
            const Vec2 next = vs[(i + 1) % k];
            const Vec2 e1 = cur - prev;
            const Vec2 e2 = next - cur;
            const double c = cross(e1, e2);
            if (c < -cross_tol) {
                if (reject_on_negative)
                    throw geometry_error("polygon vertices are not in convex counter-clockwise order");
                vs.erase(vs.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
            if (std::abs(c) <= cross_tol && dot(e1, e2) > 0.0) {
                vs.erase(vs.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
        if (changed) dedup(vs);
    }

    if (vs.size() > 2) {
        // A chain of left turns can still wind more than once; require a
        // total turning angle of one full revolution.
        double turning = 0.0;
        const std::size_t k = vs.size();
        for (std::size_t i = 0; i < k; ++i) {
            const Vec2 e1 = vs[i] - vs[(i + k - 1) % k];
            const Vec2 e2 = vs[(i + 1) % k] - vs[i];
            turning += std::atan2(cross(e1, e2), dot(e1, e2));
        }
        if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6)
            throw geometry_error("polygon vertex order winds more than once");
    }
    return vs;
}

}  // namespace detail

/// Nonempty compact interval [lower, upper] on the line.
class Interval {
public:
    Interval(double lower, double upper) : lower_(lower), upper_(upper) {
        if (!std::isfinite(lower) || !std::isfinite(upper))
            throw geometry_error("interval endpoints must be finite");
        if (lower > upper)
            throw geometry_error("interval has lower > upper");
    }

    double lower() const { return lower_; }
    double upper() const { return upper_; }

private:
    double lower_;
    double upper_;
};

/// Convex polygon given by a counter-clockwise vertex list.  Construction
/// deduplicates vertices closer than 1e-12 and rejects non-convex input.
/// Degenerate polygons (1 or 2 vertices) are allowed.
class Polygon {
public:
    explicit Polygon(std::vector<Vec2> vertices) {
        const double cross_tol = default_cross_tol(vertices_scale(vertices));
        vertices_ = detail::clean_convex_chain(std::move(vertices), 1e-12, cross_tol,
                                               /*reject_on_negative=*/true);
    }

    struct Lenient {};  // tag for internally generated near-convex chains
    Polygon(Lenient, std::vector<Vec2> vertices, double dedup_tol, double cross_tol)
        : vertices_(detail::clean_convex_chain(std::move(vertices), dedup_tol, cross_tol,
                                               /*reject_on_negative=*/false)) {}

    const std::vector<Vec2>& vertices() const { return vertices_; }

private:
    static double vertices_scale(const std::vector<Vec2>& vs) {
        double s = 0.0;
        for (const Vec2& v : vs) s = std::max({s, std::abs(v.x), std::abs(v.y)});
        return s;
    }
    static double default_cross_tol(double scale) {
        return 1e-12 * std::max(1.0, scale * scale);
    }

    std::vector<Vec2> vertices_;
};

/// Body given directly by its support values on a grid; the values must lie
/// in the discrete support cone.
class SupportBody {
public:
    SupportBody(SphereGrid grid, std::vector<double> values)
        : data_(std::move(grid), std::move(values)) {
        if (!is_support_vector(data_, 1e-8))
            throw geometry_error("values do not form a support vector on this grid");
    }

    const SphereGrid& grid() const { return data_.grid; }
    const std::vector<double>& values() const { return data_.values; }
    const SupportVector& support() const { return data_; }

private:
    SupportVector data_;
};

/// A nonempty compact convex set in R^d, d in {1, 2}: interval, polygon, or
/// grid support vector, with an optional norm bound used for validation.
class ConvexBody {
public:
    ConvexBody(Interval interval) : body_(std::move(interval)) {}
    ConvexBody(Polygon polygon) : body_(std::move(polygon)) {}
    ConvexBody(SupportBody support) : body_(std::move(support)) {}

    ConvexBody(Interval interval, double bound) : ConvexBody(std::move(interval)) {
        set_bound(bound);
    }
    ConvexBody(Polygon polygon, double bound) : ConvexBody(std::move(polygon)) {
        set_bound(bound);
    }

    int dim() const {
        if (std::holds_alternative<Interval>(body_)) return 1;
        if (std::holds_alternative<Polygon>(body_)) return 2;
        return std::get<SupportBody>(body_).grid().dim();
    }

    bool is_interval() const { return std::holds_alternative<Interval>(body_); }
    bool is_polygon() const { return std::holds_alternative<Polygon>(body_); }
    bool is_support_body() const { return std::holds_alternative<SupportBody>(body_); }

    const Interval& interval() const { return std::get<Interval>(body_); }
    const Polygon& polygon() const { return std::get<Polygon>(body_); }
    const SupportBody& support_body() const { return std::get<SupportBody>(body_); }

    std::optional<double> bound() const { return bound_; }

    /// sup over the body of the Euclidean norm (grid resolution for
    /// SupportBody variants).
    double sup_norm() const {
        if (is_interval()) {
            const auto& iv = interval();
            return std::max(std::abs(iv.lower()), std::abs(iv.upper()));
        }
        if (is_polygon()) {
            double s = 0.0;
            for (const Vec2& v : polygon().vertices()) s = std::max(s, norm(v));
            return s;
        }
        double s = 0.0;
        for (double v : support_body().values()) s = std::max(s, v);
        return s;
    }

private:
    void set_bound(double bound) {
        if (!(bound >= 0.0))
            throw geometry_error("norm bound must be nonnegative");
        if (sup_norm() > bound)
            throw geometry_error("body exceeds its declared norm bound");
        bound_ = bound;
    }

    std::variant<Interval, Polygon, SupportBody> body_;
    std::optional<double> bound_;
};

/// Support function sup_{f in body} <p, f> for a unit direction p.
inline double support_eval(const ConvexBody& body, Vec2 p) {
    if (std::abs(norm(p) - 1.0) > 1e-9)
        throw geometry_error("support function direction must be a unit vector");
    if (body.is_interval()) {
        if (std::abs(p.y) > 1e-9)
            throw geometry_error("interval bodies take directions +1 or -1");
        const auto& iv = body.interval();
        return std::max(p.x * iv.lower(), p.x * iv.upper());
    }
    if (body.is_polygon()) {
        const auto& vs = body.polygon().vertices();
        double best = dot(p, vs[0]);
        for (std::size_t i = 1; i < vs.size(); ++i) best = std::max(best, dot(p, vs[i]));
        return best;
    }
    const auto& sb = body.support_body();
    return sb.values()[sb.grid().nearest_direction(p, 1e-9)];
}

/// Evaluates the support function at every grid direction.
inline SupportVector to_support_vector(const ConvexBody& body, const SphereGrid& grid) {
    if (body.dim() != grid.dim())
        throw geometry_error("body and grid dimensions differ");
    if (body.is_support_body()) {
        if (!(body.support_body().grid() == grid))
            throw geometry_error("support body lives on a different grid");
        return body.support_body().support();
    }
    std::vector<double> values;
    values.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        values.push_back(support_eval(body, grid.direction(i)));
    return SupportVector(grid, std::move(values));
}

/// Rebuilds the body whose support vector is g: an interval for d = 1, the
/// intersection of the grid halfspaces {<p_i, x> <= g_i} for d = 2.
/// Requires is_support_vector(g, 1e-8); the round trip through
/// to_support_vector reproduces g within 1e-8 at all grid directions.
inline ConvexBody reconstruct(const SupportVector& g) {
    if (!is_support_vector(g, 1e-8))
        throw geometry_error("cannot reconstruct a body from values outside the support cone");
    if (g.grid.dim() == 1) {
        const double lower = -g.values[0];
        const double upper = g.values[1];
        if (lower > upper) {
            const double mid = (lower + upper) / 2.0;  // within 1e-8 by the cone check
            return ConvexBody(Interval(mid, mid));
        }
        return ConvexBody(Interval(lower, upper));
    }

    const std::size_t m = g.grid.size();
    std::vector<Vec2> vertices;
    vertices.reserve(m);
    double scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = (i + 1) % m;
        const double ti = g.grid.angle(i);
        const double tj = g.grid.angle(j);
        const double det = std::sin(tj - ti);
        if (std::abs(det) < 1e-12)
            throw geometry_error("adjacent grid constraints are numerically parallel");
        const Vec2 v{(g.values[i] * std::sin(tj) - g.values[j] * std::sin(ti)) / det,
                     (g.values[j] * std::cos(ti) - g.values[i] * std::cos(tj)) / det};
        vertices.push_back(v);
        scale = std::max({scale, std::abs(v.x), std::abs(v.y)});
    }
    const double dedup_tol = 1e-9 * std::max(1.0, scale);
    const double cross_tol = 1e-9 * std::max(1.0, scale * scale);
    return ConvexBody(Polygon(Polygon::Lenient{}, std::move(vertices), dedup_tol, cross_tol));
}

}  // namespace setstat
