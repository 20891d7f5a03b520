// Exception types thrown across the gazelab library.
#pragma once

#include <stdexcept>
#include <string>

namespace gazelab {

/// Base class for all gazelab errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input file header does not match the expected column schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A row of an input file could not be parsed.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, long row)
        : Error(msg + " (row " + std::to_string(row) + ")"), row_(row) {}
    long row() const { return row_; }

private:
    long row_;
};

/// The input contained no usable data.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// Data violates a structural invariant (time grid, run alternation, ...).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A parameter is outside its admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be invertible is (numerically) singular.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Perfect separation: logistic estimates diverge.
class SeparationError : public Error {
public:
    using Error::Error;
};

/// An iterative fit exhausted its iteration budget.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A Cox stratum is present but carries no events.
class StratumError : public Error {
public:
    using Error::Error;
};

/// A requested coefficient name does not exist in a fit.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Not enough residual degrees of freedom for an estimator.
class DegreesOfFreedomError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Command-line level misuse (model/input mismatch, bad flag combination).
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace gazelab
