#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rydberg {

// Invalid or inconsistent user input (config files, CLI arguments, malformed
// fixture data). Maps to process exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested object exceeds a configured resource cap. Maps to exit code 3.
struct CapacityError : std::runtime_error {
    CapacityError(const std::string& msg, std::int64_t reached, std::int64_t cap)
        : std::runtime_error(msg), count_reached(reached), limit(cap) {}
    std::int64_t count_reached;
    std::int64_t limit;
};

// An iterative solver failed to reach its tolerance. Maps to exit code 4.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& msg, double achieved, double requested)
        : std::runtime_error(msg), residual(achieved), tolerance(requested) {}
    double residual;
    double tolerance;
};

} // namespace rydberg
