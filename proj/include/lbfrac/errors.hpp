#pragma once

#include <stdexcept>
#include <string>

namespace lbfrac {

/// Invalid scenario configuration or degenerate setup geometry. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure during a run (singular system, lost distribution, NaN). CLI exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace lbfrac
