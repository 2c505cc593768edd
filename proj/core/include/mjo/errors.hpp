#pragma once

#include <stdexcept>
#include <string>

namespace mjo {

/// Invalid or inconsistent run configuration (bad keys, bad values).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad input data: I/O failures, format violations, shape mismatches,
/// non-finite values, degenerate statistics.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Model-state errors: unfitted model, divergence, graph misuse.
class ModelError : public std::runtime_error {
public:
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mjo
