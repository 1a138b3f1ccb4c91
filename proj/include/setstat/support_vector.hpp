#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "setstat/errors.hpp"
#include "setstat/sphere_grid.hpp"

namespace setstat {

/// A real-valued function on a SphereGrid, one value per direction.
///
/// Carries arbitrary grid functions, not only support functions: weighted
/// averages with signed weights may leave the support cone.
struct SupportVector {
    SphereGrid grid;
    std::vector<double> values;

    SupportVector(SphereGrid g, std::vector<double> v)
        : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid.size())
            throw geometry_error("support vector length does not match grid size");
        for (double x : values)
            if (!std::isfinite(x))
                throw geometry_error("support vector has non-finite values");
    }
};

inline void require_same_grid(const SupportVector& a, const SupportVector& b) {
    if (!(a.grid == b.grid))
        throw geometry_error("support vectors live on different grids");
}

/// Quadrature-weighted inner product sum_i w_i a_i b_i.
inline double weighted_inner(const SupportVector& a, const SupportVector& b) {
    require_same_grid(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        acc += a.grid.weight(i) * a.values[i] * b.values[i];
    return acc;
}

inline double weighted_norm(const SupportVector& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        acc += a.grid.weight(i) * a.values[i] * a.values[i];
    return std::sqrt(acc);
}

inline double weighted_distance(const SupportVector& a, const SupportVector& b) {
    require_same_grid(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += a.grid.weight(i) * d * d;
    }
    return std::sqrt(acc);
}

}  // namespace setstat
