#pragma once

#include <stdexcept>
#include <string>

namespace biasbench {

// Exit codes used by the CLI. Library code throws the typed errors below;
// the driver maps them onto these codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitDataError = 3,
  kExitPartialFailure = 4,
  kExitInternalError = 5,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Bad input data: parse failures, dimension mismatches, shortage of samples,
// degenerate labels and the like.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
};

// An experiment that produced some outputs but failed elsewhere.
class PartialFailure : public Error {
 public:
  explicit PartialFailure(const std::string& what) : Error(what) {}
};

}  // namespace biasbench
