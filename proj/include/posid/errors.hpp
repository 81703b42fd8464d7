#pragma once

#include <stdexcept>
#include <string>

namespace posid {

/// Invalid hyperparameters, inconsistent options or violated modelling assumptions.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or insufficient data (ingestion errors, missing inputs, out-of-range times).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The optimizer failed to return an optimal point.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace posid
