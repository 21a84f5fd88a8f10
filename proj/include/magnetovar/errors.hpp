#pragma once

#include <stdexcept>
#include <string>

namespace magnetovar {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: shape mismatch, violated precondition, geometry off the grid.
class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : Error(what + " (residual " + std::to_string(residual) + " after " +
                std::to_string(iterations) + " iterations)"),
          residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

}  // namespace magnetovar
