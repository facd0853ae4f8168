#pragma once

#include <stdexcept>
#include <string>

namespace edml {

enum class ErrorCode {
    ZeroImpedance,
    Disconnected,
    UnknownBus,
    TierUnsupported,
    LimitOutOfRange,
    DimensionMismatch,
    InvalidNetwork,
    InfeasibleByConstruction,
    SyntaxError,
    MissingTable,
    ColumnCountMismatch,
    UnsupportedCost,
    IsolatedBusAfterFiltering,
};

const char* error_code_name(ErrorCode code);

/// Structured error carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Parse error with source position (1-based line/column).
class ParseError : public Error {
public:
    ParseError(ErrorCode code, int line, int column, const std::string& message)
        : Error(code, "line " + std::to_string(line) + ", col " + std::to_string(column) +
                          ": " + message),
          line_(line),
          column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace edml
