#pragma once

#include <stdexcept>
#include <string>

namespace tdval {

// Input or configuration rejected before any work was done. The CLI maps
// these to exit status 2; everything else is a runtime failure (status 1).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t row)
        : ValidationError(what + " (row " + std::to_string(row) + ")"), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class DegenerateDatasetError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class RangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SizeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SplitError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InfeasibleError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UndefinedMetricError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// File system failures (unreadable input, unwritable output).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tdval
