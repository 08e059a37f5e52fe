#pragma once

#include <stdexcept>
#include <string>

namespace sabre {

// Exit codes used by the CLI: 0 success, 2 config error, 3 invariant
// breach, 4 I/O error.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric degeneracy or a non-finite value where one must not appear.
struct InvariantBreach : std::runtime_error {
  explicit InvariantBreach(const std::string& msg) : std::runtime_error(msg) {}
};

struct AnalysisError : std::runtime_error {
  explicit AnalysisError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sabre
