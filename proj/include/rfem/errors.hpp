#pragma once

#include <stdexcept>
#include <string>

namespace rfem {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Numerical failure at run time: solver breakdown, singular local matrix,
/// violated mesh precondition discovered during assembly (CLI exit code 3).
struct NumericalError : Error {
    using Error::Error;
};

} // namespace rfem
