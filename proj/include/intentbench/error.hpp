#pragma once

#include <stdexcept>

namespace intentbench {

/// Malformed, inconsistent or insufficient input data. The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad flag values, missing paths). The CLI maps it to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace intentbench
