#pragma once

#include <stdexcept>
#include <string>

namespace popcal {

/// Malformed or inconsistent input data. Maps to exit code 1 in the CLI.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad invocation or configuration. Maps to exit code 2 in the CLI.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a valid result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace popcal
