#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace caprisk {

/// Invalid argument or out-of-range model parameter.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A rate-card lookup for an unknown model class or tool kind.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Scenario file or registry problem. Carries the 1-based line number when
/// the error comes from a file (0 otherwise).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace caprisk
