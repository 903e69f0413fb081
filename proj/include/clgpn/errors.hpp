#pragma once

#include <stdexcept>
#include <string>

namespace clgpn {

/// Argument outside the mathematical domain of an operation (e.g. a zero vector
/// passed to the angle projection, a non-positive radius).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent input (labels out of range, bad files, bad matrices).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite quantity encountered while running a chain.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace clgpn
