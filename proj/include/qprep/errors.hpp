// errors.hpp - exception types shared by every qprep module
#pragma once

#include <stdexcept>
#include <string>

namespace qprep {

// Shapes or factor dimensions that do not fit together.
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input that is not a valid density matrix / unitary / projection within tolerance.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A documented precondition (faithfulness, stationarity, domination) fails.
struct PreconditionViolated : std::domain_error {
    using std::domain_error::domain_error;
};

// Numeric guard: the dense chain space N * d^n would exceed the configured cap.
struct ChainCapExceeded : std::runtime_error {
    ChainCapExceeded(long long requested, long long cap)
        : std::runtime_error("chain dimension " + std::to_string(requested) +
                             " exceeds cap " + std::to_string(cap)),
          requested_dim(requested), cap_dim(cap) {}
    long long requested_dim;
    long long cap_dim;
};

}  // namespace qprep
