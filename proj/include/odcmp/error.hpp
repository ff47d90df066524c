#pragma once

#include <stdexcept>
#include <string>

namespace odcmp {

// Exit codes used by the CLI: 0 success, 2 config error, 3 data error, 4 internal.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitInternal = 4,
};

// Problem with run configuration: bad flags, missing paths, inconsistent options.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problem with input data. `kind()` is a stable machine-readable tag
// ("weight-sum-violation", "unknown-unit", ...) that tests match against.
class DataError : public std::runtime_error {
 public:
  DataError(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

}  // namespace odcmp
