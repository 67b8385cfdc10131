#pragma once

#include <stdexcept>
#include <string>

namespace multipref {

// Invalid input, configuration or precondition. The CLI maps it to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite loss or gradient during training. The CLI maps it to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace multipref
