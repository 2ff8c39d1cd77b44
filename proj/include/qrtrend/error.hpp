#pragma once

#include <stdexcept>
#include <string>

namespace qrtrend {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (tau outside (0,1), f0 <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Size or index outside the supported range, or an exact value that no longer fits.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Design matrix without full column rank.
class RankError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: non-convergence, loss of positive definiteness, too many failed refits.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed user input (CSV, config file, command-line values).
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace qrtrend
