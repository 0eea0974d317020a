#pragma once

#include <stdexcept>
#include <string>

namespace rgam {

// Invalid configuration or arguments supplied by the caller.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input data that violates a dataset invariant (bad CSV cell, family mismatch, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Solver failure: divergence, non-finite objective, non-convergence.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rgam
