#pragma once

#include <stdexcept>
#include <string>

namespace hpfa {

// Invalid inputs: malformed files, out-of-domain parameters, inconsistent
// dimensions.  The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures during sampling or evaluation (non-finite values,
// non-positive-definite precision matrices, impossible weight vectors).
// The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hpfa
