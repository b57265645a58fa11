#pragma once

#include <stdexcept>
#include <string>

namespace cicm {

// Invalid user-supplied parameters (bad rho, non-positive lengthscale, ...).
// Mapped to exit code 2 by the CLI.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Structurally broken inputs: dimension mismatches, empty required blocks,
// malformed files.  Mapped to exit code 3 by the CLI.
class DataShapeError : public std::runtime_error {
 public:
  explicit DataShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure after all recovery attempts (Cholesky jitter ladder
// exhausted, IRLS divergence).  Mapped to exit code 4 by the CLI.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cicm
