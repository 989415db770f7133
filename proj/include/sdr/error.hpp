#pragma once

#include <stdexcept>
#include <string>

namespace sdr {

/// Base of everything the library throws on bad data or an invalid request.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (file, column, value, shape).
class DataError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be invertible or positive definite is not.
class SingularError : public Error {
public:
    SingularError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}

    /// Ratio of the largest to the smallest eigenvalue (inf when singular).
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// A precondition on a dimension, level or option was violated.
class ArgumentError : public Error {
public:
    using Error::Error;
};

}  // namespace sdr
