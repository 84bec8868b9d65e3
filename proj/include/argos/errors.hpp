#pragma once

#include <stdexcept>
#include <string>

namespace argos {

// Bad input data: malformed files, violated preconditions on data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent scenario, experiment, or model configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced non-finite values or otherwise failed to converge.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace argos
