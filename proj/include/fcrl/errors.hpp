#pragma once

#include <stdexcept>
#include <string>

namespace fcrl {

// Bad user input: config files, CLI flags, out-of-range hyperparameters.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing or malformed on-disk artifacts (datasets, checkpoints, manifests).
struct LoadError : std::runtime_error {
  explicit LoadError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, dead representations, anything the math cannot recover from.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated internal contract (e.g. shape mismatch between cache and params).
struct InternalError : std::logic_error {
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace fcrl
