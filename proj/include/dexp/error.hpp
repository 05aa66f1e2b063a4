#pragma once

#include <stdexcept>

namespace dexp {

// Malformed configs and bad user input (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerics gone bad: non-finite values, divergence, failed convergence
// (CLI exit code 3).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File I/O problems (CLI exit code 4).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dexp
