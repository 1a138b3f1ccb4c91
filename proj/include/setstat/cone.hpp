#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "setstat/errors.hpp"
#include "setstat/sphere_grid.hpp"
#include "setstat/support_vector.hpp"

namespace setstat {

/// Linear inequalities carving the discrete support cone out of the grid
/// functions.
///
/// d = 1: the single inequality g(1) + g(-1) >= 0, i.e. the interval
/// [-g(-1), g(1)] is nonempty.  d = 2: the cyclic family
///   g_i sin(t_{i+1}-t_{i-1}) <= g_{i-1} sin(t_{i+1}-t_i) + g_{i+1} sin(t_i-t_{i-1})
/// over all i mod m, the second-difference condition for support functions
/// restricted to the circle grid.
class ConeDescription {
public:
    struct Constraint {
        std::size_t idx[3];   // prev, self, next (self only for d=1)
        double coef[3];       // inequality is coef . g <= 0
        std::size_t arity;
    };

    explicit ConeDescription(const SphereGrid& grid) : grid_(grid) {
        if (grid.dim() == 1) {
            Constraint c;
            c.idx[0] = 0;
            c.idx[1] = 1;
            c.idx[2] = 0;
            c.coef[0] = -1.0;
            c.coef[1] = -1.0;
            c.coef[2] = 0.0;
            c.arity = 2;
            constraints_.push_back(c);
        } else {
            const std::size_t m = grid.size();
            constraints_.reserve(m);
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t prev = (i + m - 1) % m;
                const std::size_t next = (i + 1) % m;
                const double gap_prev = angle_gap(grid.angle(prev), grid.angle(i));
                const double gap_next = angle_gap(grid.angle(i), grid.angle(next));
                if (gap_prev <= 0.0 || gap_prev >= std::numbers::pi ||
                    gap_next <= 0.0 || gap_next >= std::numbers::pi)
                    throw geometry_error("cone constraints need angle gaps in (0, pi)");
                Constraint c;
                c.idx[0] = prev;
                c.idx[1] = i;
                c.idx[2] = next;
                c.coef[0] = -std::sin(gap_next);
                c.coef[1] = std::sin(gap_prev + gap_next);
                c.coef[2] = -std::sin(gap_prev);
                c.arity = 3;
                constraints_.push_back(c);
            }
        }
    }

    const SphereGrid& grid() const { return grid_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }

    double residual(const std::vector<double>& values, std::size_t k) const {
        const Constraint& c = constraints_[k];
        double r = 0.0;
        for (std::size_t j = 0; j < c.arity; ++j) r += c.coef[j] * values[c.idx[j]];
        return r;
    }

    double max_residual(const std::vector<double>& values) const {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < constraints_.size(); ++k)
            worst = std::max(worst, residual(values, k));
        return worst;
    }

private:
    static double angle_gap(double from, double to) {
        double gap = to - from;
        const double two_pi = 2.0 * std::numbers::pi;
        while (gap <= 0.0) gap += two_pi;
        while (gap > two_pi) gap -= two_pi;
        return gap;
    }

    SphereGrid grid_;
    std::vector<Constraint> constraints_;
};

/// True iff every cone constraint holds within tol.
inline bool is_support_vector(const SupportVector& g, double tol = 1e-9) {
    const ConeDescription cone(g.grid);
    return cone.max_residual(g.values) <= tol;
}

/// Quadrature-weighted L2 projection onto the discrete support cone.
///
/// d = 1 is closed form.  d = 2 solves the dual nonnegative quadratic
/// program with an active-set method (Lawson-Hanson with a warm start):
/// the primal solution is h = g - W^{-1} A' lambda with lambda >= 0 and
/// complementary slackness, so the output satisfies the KKT conditions to
/// near machine precision and is_support_vector with tol 1e-8.
inline SupportVector project_to_cone(const SupportVector& g) {
    if (g.grid.dim() == 1) {
        const double sum = g.values[0] + g.values[1];
        if (sum >= 0.0) return g;
        const double delta = sum / 2.0;
        return SupportVector(g.grid, {g.values[0] - delta, g.values[1] - delta});
    }

    const ConeDescription cone(g.grid);
    const auto& constraints = cone.constraints();
    const auto m = static_cast<Eigen::Index>(constraints.size());

    if (cone.max_residual(g.values) <= 0.0) return g;

    // Dual objective: min_{lambda >= 0} 1/2 lambda' Q lambda - lambda' c
    // with Q = A W^{-1} A' and c = A g.  Rows of A overlap only between
    // neighbors, so Q is cyclically banded; build it from the overlaps.
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto& cr = constraints[static_cast<std::size_t>(r)];
        for (Eigen::Index off = -2; off <= 2; ++off) {
            const Eigen::Index s = (r + off + m) % m;
            const auto& cs = constraints[static_cast<std::size_t>(s)];
            double acc = 0.0;
            for (std::size_t jr = 0; jr < cr.arity; ++jr)
                for (std::size_t js = 0; js < cs.arity; ++js)
                    if (cr.idx[jr] == cs.idx[js])
                        acc += cr.coef[jr] * cs.coef[js] / g.grid.weight(cr.idx[jr]);
            q(r, s) = acc;
        }
    }
    Eigen::VectorXd c(m);
    for (Eigen::Index k = 0; k < m; ++k)
        c(k) = cone.residual(g.values, static_cast<std::size_t>(k));

    double scale = 1.0;
    for (double v : g.values) scale = std::max(scale, std::abs(v));
    const double tol_stop = 1e-12 * scale;

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    std::vector<bool> passive(static_cast<std::size_t>(m), false);
    for (Eigen::Index k = 0; k < m; ++k)
        if (c(k) > tol_stop) passive[static_cast<std::size_t>(k)] = true;

    auto solve_passive = [&](Eigen::VectorXd& target) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index k = 0; k < m; ++k)
            if (passive[static_cast<std::size_t>(k)]) idx.push_back(k);
        const auto p = static_cast<Eigen::Index>(idx.size());
        target.setZero();
        if (p == 0) return idx;
        Eigen::MatrixXd qpp(p, p);
        Eigen::VectorXd cp(p);
        for (Eigen::Index r = 0; r < p; ++r) {
            cp(r) = c(idx[static_cast<std::size_t>(r)]);
            for (Eigen::Index s = 0; s < p; ++s)
                qpp(r, s) = q(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(s)]);
        }
        // tiny ridge keeps degenerate active sets solvable
        qpp.diagonal().array() += 1e-13 * qpp.diagonal().maxCoeff();
        const Eigen::VectorXd sp = qpp.ldlt().solve(cp);
        for (Eigen::Index r = 0; r < p; ++r) target(idx[static_cast<std::size_t>(r)]) = sp(r);
        return idx;
    };

    const std::size_t max_iterations = 40 * static_cast<std::size_t>(m);
    std::size_t iterations = 0;
    bool done = false;
    while (!done) {
        // restore dual feasibility on the passive set
        for (;;) {
            if (++iterations > max_iterations)
                throw numerical_error(
                    "cone projection did not converge after " +
                    std::to_string(max_iterations) + " active-set steps (residual " +
                    std::to_string((c - q * lambda).maxCoeff()) + ")");
            Eigen::VectorXd s(m);
            const auto idx = solve_passive(s);
            if (idx.empty()) break;
            double alpha = 1.0;
            for (const Eigen::Index k : idx)
                if (s(k) < 0.0 && lambda(k) - s(k) > 0.0)
                    alpha = std::min(alpha, lambda(k) / (lambda(k) - s(k)));
            if (alpha >= 1.0) {
                lambda = s;
                break;
            }
            lambda += alpha * (s - lambda);
            for (const Eigen::Index k : idx)
                if (lambda(k) <= 1e-14) {
                    lambda(k) = 0.0;
                    passive[static_cast<std::size_t>(k)] = false;
                }
        }
        // primal residuals of the slack constraints
        const Eigen::VectorXd w = c - q * lambda;
        Eigen::Index worst = -1;
        double worst_value = tol_stop;
        for (Eigen::Index k = 0; k < m; ++k)
            if (!passive[static_cast<std::size_t>(k)] && w(k) > worst_value) {
                worst_value = w(k);
                worst = k;
            }
        if (worst < 0) done = true;
        else passive[static_cast<std::size_t>(worst)] = true;
    }

    std::vector<double> values(g.values);
    for (Eigen::Index k = 0; k < m; ++k) {
        if (lambda(k) == 0.0) continue;
        const auto& con = constraints[static_cast<std::size_t>(k)];
        for (std::size_t j = 0; j < con.arity; ++j)
            values[con.idx[j]] -= lambda(k) * con.coef[j] / g.grid.weight(con.idx[j]);
    }
    SupportVector out(g.grid, std::move(values));
    if (cone.max_residual(out.values) > 1e-8)
        throw numerical_error("cone projection finished outside tolerance");
    return out;
}

}  // namespace setstat
