#pragma once

#include <stdexcept>
#include <string>

namespace condlimit {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter or precondition outside the accepted range.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A marginal with zero variance where a non-degenerate one is required.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A requested grid or enumeration exceeds the configured budget.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// Conditioning event whose probability is indistinguishable from the error budget.
class IllConditionedError : public Error {
public:
    using Error::Error;
};

/// Roundoff beyond what the engine accepts as benign (e.g. strongly negative cells).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An iterative numerical procedure did not reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

}  // namespace condlimit
