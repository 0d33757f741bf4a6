#pragma once

#include <stdexcept>
#include <string>

namespace bellfringe {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Witness quantities are undefined (zero visibility, vanishing <Jx>).
class UndefinedWitness : public Error {
public:
    using Error::Error;
};

/// An iterative solver failed to converge.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations)
        : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}

    int iterations() const noexcept { return iterations_; }

private:
    int iterations_;
};

/// A computed result failed a post-condition check (residual, orthonormality).
class VerificationError : public Error {
public:
    using Error::Error;
};

}  // namespace bellfringe
