#pragma once

#include <stdexcept>
#include <string>

namespace claro {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad input: malformed files, schema mismatches, out-of-range arguments.
/// The CLI maps these to exit code 1.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Numerical failure inside an algorithm (divergence, singular systems).
class ComputationError : public Error {
public:
    explicit ComputationError(const std::string& what) : Error(what) {}
};

}  // namespace claro
