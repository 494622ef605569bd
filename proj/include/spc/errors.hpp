#pragma once

#include <stdexcept>
#include <string>

namespace spc {

/// Bad input: malformed sizes, non-positive parameters, empty ensembles.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear solve failed or did not reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An algorithmic precondition broke at runtime (e.g. a non-positive
/// multiplier denominator).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace spc
