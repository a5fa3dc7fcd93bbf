#pragma once

#include <stdexcept>
#include <string>

namespace riskq {

/// Bad arguments, malformed configuration, malformed input files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An enumeration guard was exceeded (the operation would not finish).
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant or an environment contract was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace riskq
