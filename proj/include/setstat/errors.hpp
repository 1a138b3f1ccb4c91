#pragma once

#include <stdexcept>
#include <string>

namespace setstat {

/// Malformed input files or configuration (CLI exit code 2).
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid geometry: bad bodies, grids, dimension mismatches (CLI exit code 3).
class geometry_error : public std::runtime_error {
public:
    explicit geometry_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical or statistical failure: singular designs, non-convergence (CLI exit code 4).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace setstat
