#pragma once

#include <stdexcept>
#include <string>

namespace carlevel {

/// Bad input: malformed files, inconsistent configuration, violated preconditions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: failed factorisation, non-finite state.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace carlevel
