#pragma once

#include <stdexcept>
#include <string>

namespace erp {

/// Base class for every error raised by the library. `category()` is the
/// short tag printed by the command line tool in front of the message.
class Error : public std::runtime_error {
public:
    Error(const std::string& category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

/// Invalid model parameters (negative volatility, non-stationary GARCH, ...).
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error("parameter", what) {}
};

/// Array dimensions do not agree.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain", what) {}
};

/// Inconsistent experiment or instrument configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// NaN or infinity where a finite number is required.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

/// Operation invoked in the wrong state (e.g. backward before forward).
class StateError : public Error {
public:
    explicit StateError(const std::string& what) : Error("state", what) {}
};

/// File could not be read or written, or has a malformed layout.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace erp
