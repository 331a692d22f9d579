#pragma once

#include <stdexcept>
#include <string>

namespace hankel {

// Out-of-range parameter (order, time, exponent).
struct parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Non-finite or otherwise unusable input value.
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Grid/function shape or axis mismatch.
struct grid_mismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Quadrature, series or limit did not settle.
struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation requested at a kernel singularity (x = y).
struct singular_point : std::domain_error {
    using std::domain_error::domain_error;
};

} // namespace hankel
