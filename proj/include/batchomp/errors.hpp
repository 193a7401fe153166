#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace batchomp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad shapes, zero columns, out-of-domain options.
class InputError : public Error {
public:
    using Error::Error;
};

/// Packed-triangle index outside the upper triangle or past capacity.
class AddressingError : public Error {
public:
    using Error::Error;
};

/// A pivot (or extension diagonal) fell at or below the degeneracy tolerance.
class RankDeficiencyError : public Error {
public:
    RankDeficiencyError(std::size_t order, const std::string& what)
        : Error(what), order_(order) {}

    /// Zero-based order of the factor at which the failure occurred.
    std::size_t order() const noexcept { return order_; }

private:
    std::size_t order_;
};

/// NaN or division by a zero diagonal.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Broken internal invariant (double capture, duplicate atom reaching a kernel).
class LogicError : public Error {
public:
    using Error::Error;
};

/// Workspace too large to allocate.
class SizingError : public Error {
public:
    using Error::Error;
};

/// Exhaustive search would exceed its combinatorial budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// Malformed matrix file.
class FormatError : public Error {
public:
    FormatError(std::size_t offset, const std::string& what)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace batchomp
