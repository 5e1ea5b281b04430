#pragma once

#include <stdexcept>
#include <string>

namespace hdp {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration or invalid arguments detected before any work starts.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// A conditioned covariance failed to factor beyond the jitter tolerance.
class IllConditionedError : public Error {
public:
    IllConditionedError(const std::string& msg, double offending_eigenvalue)
        : Error(msg), min_eigenvalue(offending_eigenvalue) {}
    double min_eigenvalue;
};

/// Training loss exploded or became non-finite.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, double last_finite_loss)
        : Error(msg), last_finite_loss(last_finite_loss) {}
    double last_finite_loss;
};

/// A sampled task has no collision-free path.
class UnreachableError : public Error {
public:
    explicit UnreachableError(const std::string& msg) : Error(msg) {}
};

/// File read/write or format problems.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace hdp
