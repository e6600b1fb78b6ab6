#pragma once

#include <stdexcept>
#include <string>

namespace stochdiag {

// Malformed or inconsistent input data (CSV cells, missing table rows, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Linear-algebra or iteration failures (factorization breakdown, non-PSD
// matrices after maximum jitter escalation, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A replicate pool is too small for the requested statistic.
struct InsufficientReplicationError : std::domain_error {
    using std::domain_error::domain_error;
};

// A requested skewness/kurtosis lies outside what the skew-normal /
// generalised-normal families can represent.
struct UnattainableShapeError : std::domain_error {
    using std::domain_error::domain_error;
};

// Hyperparameter search produced no usable optimum.
struct FittingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace stochdiag
