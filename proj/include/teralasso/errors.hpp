#pragma once

#include <stdexcept>
#include <string>

namespace teralasso {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Inputs violate a documented precondition (negative penalty, bad parameter, ...).
class ValidationError : public Error
{
public:
    using Error::Error;
};

/// Mode dimensions of two operands do not agree.
class DimensionError : public Error
{
public:
    using Error::Error;
};

/// A dense code path was asked to materialize a matrix above the configured cap.
class SizeLimitError : public Error
{
public:
    using Error::Error;
};

/// The Kronecker sum is not positive definite; carries the smallest eigenvalue sum.
class NotPositiveDefiniteError : public Error
{
public:
    explicit NotPositiveDefiniteError(double min_eigenvalue)
        : Error("Kronecker sum is not positive definite (min eigenvalue "
                + std::to_string(min_eigenvalue) + ")"),
          min_eigenvalue_(min_eigenvalue)
    {}

    double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace teralasso
