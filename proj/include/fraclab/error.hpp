#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

/// Invalid input, configuration or precondition. CLI exit code 2.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical failure (singular system, divergence, non-convergence). CLI exit code 3.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fraclab
