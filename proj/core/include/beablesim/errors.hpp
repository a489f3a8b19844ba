#pragma once

#include <stdexcept>
#include <string>

namespace beablesim {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Operand dimensions do not match, or a tensor product exceeds the dimension cap.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(what) {}
};

/// A value violates a structural invariant (normalization, Hermiticity, unitarity, ...).
class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& what) : Error(what) {}
};

/// Config-file parse or validation failure, anchored to a source location.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line, int column)
        : Error(format(what, line, column)), line_(line), column_(column) {}
    explicit ConfigError(const std::string& what) : Error(what), line_(0), column_(0) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    static std::string format(const std::string& what, int line, int column) {
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
    }
    int line_;
    int column_;
};

/// The final apparatus beable value does not single out one pointer state.
class ReadoutAmbiguityError : public Error {
public:
    explicit ReadoutAmbiguityError(const std::string& what) : Error(what) {}
};

} // namespace beablesim
