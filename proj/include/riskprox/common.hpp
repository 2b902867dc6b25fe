#pragma once

#include <stdexcept>
#include <string>

namespace riskprox {

/// Structural problems: dimension mismatches, vectors living on different spaces.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Invalid parameterizations: bad utility parameters, step sizes violating the
/// step-size condition, inverted box bounds.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed input files.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Economically inconsistent model inputs (e.g. unattainable return target).
struct model_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values produced by the iteration.
struct divergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Iterative routine failed to reach its tolerance; carries the last estimate.
struct convergence_error : std::runtime_error {
    double last_estimate;
    convergence_error(const std::string& msg, double estimate)
        : std::runtime_error(msg), last_estimate(estimate) {}
};

}  // namespace riskprox
