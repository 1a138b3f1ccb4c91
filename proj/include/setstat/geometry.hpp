#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "setstat/convex_body.hpp"
#include "setstat/errors.hpp"
#include "setstat/sphere_grid.hpp"
#include "setstat/support_vector.hpp"

namespace setstat {

inline void require_same_dim(const ConvexBody& a, const ConvexBody& b) {
    if (a.dim() != b.dim())
        throw geometry_error("bodies have different dimensions");
}

/// Signed Minkowski combination (+)_k c_k F_k evaluated through support
/// vectors.  A term with coefficient t >= 0 contributes t s(p, F); a term
/// with t < 0 contributes |t| s(-p, F) via the antipodal index, so that
/// s(p, tF) = |t| s(sign(t) p, F) holds exactly.
inline ConvexBody minkowski_combine(const std::vector<std::pair<double, ConvexBody>>& terms,
                                    const SphereGrid& grid) {
    if (terms.empty())
        throw geometry_error("minkowski combination of an empty term list");
    std::vector<double> acc(grid.size(), 0.0);
    for (const auto& [coef, body] : terms) {
        if (body.dim() != grid.dim())
            throw geometry_error("bodies have different dimensions");
        const SupportVector s = to_support_vector(body, grid);
        if (coef >= 0.0) {
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += coef * s.values[i];
        } else {
            for (std::size_t i = 0; i < acc.size(); ++i)
                acc[i] += -coef * s.values[grid.antipode(i)];
        }
    }
    return reconstruct(SupportVector(grid, std::move(acc)));
}

/// L2 distance between support functions under the grid quadrature.  For
/// d = 1 this is exactly sqrt(g(-1)^2 + g(1)^2) of the difference.
inline double dkc_distance(const ConvexBody& a, const ConvexBody& b, const SphereGrid& grid) {
    require_same_dim(a, b);
    return weighted_distance(to_support_vector(a, grid), to_support_vector(b, grid));
}

/// Hausdorff distance as the sup-norm distance between support functions:
/// exact for d = 1, a grid-resolution approximation for d = 2.
inline double hausdorff_distance(const ConvexBody& a, const ConvexBody& b,
                                 const SphereGrid& grid) {
    require_same_dim(a, b);
    const SupportVector sa = to_support_vector(a, grid);
    const SupportVector sb = to_support_vector(b, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < sa.values.size(); ++i)
        worst = std::max(worst, std::abs(sa.values[i] - sb.values[i]));
    return worst;
}

/// Support-function domination test: true iff s(p_i, a) <= s(p_i, b) + tol at
/// every grid direction.  Equivalent to inclusion for d = 1; a necessary
/// condition at grid resolution for d = 2.
inline bool is_subset(const ConvexBody& a, const ConvexBody& b, const SphereGrid& grid,
                      double tol = 1e-9) {
    require_same_dim(a, b);
    const SupportVector sa = to_support_vector(a, grid);
    const SupportVector sb = to_support_vector(b, grid);
    for (std::size_t i = 0; i < sa.values.size(); ++i)
        if (sa.values[i] > sb.values[i] + tol) return false;
    return true;
}

}  // namespace setstat
