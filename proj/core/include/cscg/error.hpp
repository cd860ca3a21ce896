#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cscg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or argument violation (bad sizes, out-of-range indices, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or incompatible file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A forward pass reached a step at which the observed data has probability
/// zero under the model.
class ZeroProbabilityError : public Error {
 public:
  ZeroProbabilityError(std::size_t step, const std::string& what)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// No admissible path exists (decoding a zero-probability sequence, or a plan
/// whose success probability is below the requested threshold).
class NoPathError : public Error {
 public:
  using Error::Error;
};

}  // namespace cscg
