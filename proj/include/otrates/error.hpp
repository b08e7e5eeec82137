#pragma once

#include <stdexcept>
#include <string>

namespace otrates {

// Bad input: malformed parameters, size mismatches, unknown keys. Exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Evaluation at a point where the requested quantity does not exist
// (e.g. the gradient of a cost at a kink).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Solver or I/O failure. Exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace otrates
