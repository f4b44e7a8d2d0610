#pragma once

#include <stdexcept>

namespace lightstat {

// Invalid model, chain, or experiment parameter (outside its domain).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Configuration / environment problem at the command level (unreadable
// config file, unwritable output directory). CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data cannot support the requested computation. CLI exit code 3.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

// A run whose mean voltage is nonpositive carries no Fano information.
class DegenerateRunError : public DataError {
public:
    using DataError::DataError;
};

class NormalizationError : public DataError {
public:
    using DataError::DataError;
};

// Fit-level failure. CLI exit code 4.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rank-deficient design, e.g. every point at the same mean voltage.
class DegenerateDesignError : public FitError {
public:
    using FitError::FitError;
};

// Operation invoked on a configuration it does not model.
class UnsupportedConfigError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace lightstat
