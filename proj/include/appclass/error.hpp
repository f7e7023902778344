#pragma once

#include <stdexcept>
#include <string>

namespace appclass {

/// Bad input: malformed files, violated invariants, unsupported versions.
/// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A channel has no usable evidence to train on.
class InsufficientEvidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace appclass
