#pragma once

#include <stdexcept>
#include <string>

namespace resprect {

/// Shape mismatch between tensors or against a declared architecture.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// NaN/Inf encountered, or a numeric routine left its domain.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Operation invoked on an object in the wrong state (e.g. sampling from an
/// empty replay buffer, stepping a finished episode).
class StateError : public std::runtime_error {
 public:
  explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad key, value or combination in a run configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Corrupt, truncated or incompatible checkpoint file.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace resprect
