#pragma once

#include <stdexcept>
#include <string>

namespace mlms {

/// Bad dimensions, out-of-range hyperparameters, malformed specs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A NaN or infinity reached a filter step. The filter state is left untouched.
class NonFiniteInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Numerical breakdown inside a recursion (e.g. RLS covariance no longer positive definite).
class NumericalDegeneracy : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Config file problems. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace mlms
