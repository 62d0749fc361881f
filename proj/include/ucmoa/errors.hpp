#ifndef UCMOA_ERRORS_HPP
#define UCMOA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ucmoa {

// Error families map to CLI exit codes: ConfigError -> 1, DataError -> 2,
// NumericError -> 3.

/// Invalid configuration, usage, or argument validation failure.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed, inconsistent, or missing input data.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dimension or layout mismatch between data and model.
class ShapeError : public DataError {
public:
    explicit ShapeError(const std::string& msg) : DataError(msg) {}
};

/// Unparseable document; message carries the location.
class ParseError : public DataError {
public:
    explicit ParseError(const std::string& msg) : DataError(msg) {}
};

/// Operation invoked on an object in an unusable state (e.g. empty table).
class StateError : public DataError {
public:
    explicit StateError(const std::string& msg) : DataError(msg) {}
};

/// Non-finite values or numeric breakdown during computation.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ucmoa

#endif
