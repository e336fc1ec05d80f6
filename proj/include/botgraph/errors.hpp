#pragma once

#include <stdexcept>
#include <string>

namespace botgraph {

// Process exit codes shared by the CLI and the error hierarchy.
enum class ExitCode : int {
  ok = 0,
  input_error = 2,    // malformed or unreadable input data
  config_error = 3,   // invalid flags, spec files, or dataset shape
  numeric_error = 4,  // convergence failure or divergent training
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Bad bytes on disk: parse errors, format errors, ordering violations,
// truncated files, I/O failures.
struct InputError : Error {
  explicit InputError(std::string msg)
      : Error(ExitCode::input_error, std::move(msg)) {}
};

// The request itself is unsatisfiable: bad flag combinations, degenerate
// datasets (e.g. no malicious hosts), invalid scenario specs.
struct ConfigError : Error {
  explicit ConfigError(std::string msg)
      : Error(ExitCode::config_error, std::move(msg)) {}
};

// Iterations exceeded, divergence, non-finite values.
struct NumericError : Error {
  explicit NumericError(std::string msg)
      : Error(ExitCode::numeric_error, std::move(msg)) {}
};

}  // namespace botgraph
