#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ou2f {

/// Caller passed an argument violating a precondition (dt <= 0, negative
/// maturity, malformed vector, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A closed-form expression produced a non-finite value (parameter overflow).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A matrix factorization or recursion failed at a specific time step.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::size_t time_index)
        : std::runtime_error(what + " (time index " + std::to_string(time_index) + ")"),
          time_index_(time_index) {}

    std::size_t time_index() const noexcept { return time_index_; }

private:
    std::size_t time_index_;
};

/// CSV / theta-file ingestion failure, pinned to a file location.
class ParseError : public std::runtime_error {
public:
    enum class Kind {
        Io,
        BadHeader,
        BadCell,
        NonIncreasingDates,
        NegativePrice,
        NegativeMaturity,
        NonIncreasingMaturities,
        MaskMismatch,
    };

    ParseError(Kind kind, const std::string& what, long row = -1, long column = -1)
        : std::runtime_error(format(what, row, column)), kind_(kind), row_(row), column_(column) {}

    Kind kind() const noexcept { return kind_; }
    long row() const noexcept { return row_; }       ///< 1-based file line, -1 if n/a
    long column() const noexcept { return column_; } ///< 1-based CSV column, -1 if n/a

private:
    static std::string format(const std::string& what, long row, long column) {
        std::string s = what;
        if (row >= 0) s += " (line " + std::to_string(row);
        if (row >= 0 && column >= 0) s += ", column " + std::to_string(column);
        if (row >= 0) s += ")";
        return s;
    }

    Kind kind_;
    long row_;
    long column_;
};

/// Every start of the multi-start fit failed.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ou2f
