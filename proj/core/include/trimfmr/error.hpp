#pragma once

#include <stdexcept>
#include <string>

namespace trimfmr {

// Invalid argument or precondition violation (bad alpha, empty subset, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Input data cannot be used: malformed CSV, too few rows for the model.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration file or flag combination is invalid.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Solver breakdown: singular normal equations, monotonicity violation,
// every random start failed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The penalized objective decreased between EM iterations. Indicates a bug,
// never a property of the data, so callers must not swallow it.
class MonotonicityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace trimfmr
