#pragma once

#include <stdexcept>
#include <string>

namespace fracle {

/// Invalid user input: bad resolution, unsupported dimension, malformed config.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine could not deliver its contract (factorization, residual check).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fracle
