#pragma once

#include <stdexcept>
#include <string>

namespace hbmo {

/// Invalid parameters or configuration. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (no convergence, missing interface, ...).
/// The CLI maps this to exit code 1.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hbmo
