#pragma once

#include <stdexcept>
#include <string>

namespace condldp {

// Invalid arguments and violated operation preconditions. Messages name the
// offending quantity (symbol, row, file) so CLI users can fix their configs.
class argument_error : public std::invalid_argument {
 public:
  explicit argument_error(const std::string& what) : std::invalid_argument(what) {}
};

// An enumeration or table cap was exceeded. Deliberate: we refuse to truncate
// silently, the caller must raise the cap or shrink the instance.
class resource_error : public std::runtime_error {
 public:
  explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

// A condition that the library itself guarantees failed to hold. Reaching
// this means a bug, not a user mistake.
class contract_error : public std::logic_error {
 public:
  explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

// Iterative solver ran out of its iteration budget. Carries the residual at
// the last iterate so the failure is diagnosable from the message alone.
class convergence_error : public std::runtime_error {
 public:
  convergence_error(const std::string& what, double last_residual, long iterations)
      : std::runtime_error(what), last_residual(last_residual), iterations(iterations) {}

  double last_residual;
  long iterations;
};

}  // namespace condldp
