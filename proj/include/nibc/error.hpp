#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nibc {

enum class ErrorKind {
  invalid_input,
  domain_violation,
  unsupported_instance,
  class_mismatch,
  admissibility_violation,
  range_violation,
  shape_mismatch,
  invalid_parameters,
  budget_exceeded,
  infeasible_truncation,
  inconsistency,
  io_error,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::domain_violation: return "domain-violation";
    case ErrorKind::unsupported_instance: return "unsupported-instance";
    case ErrorKind::class_mismatch: return "class-mismatch";
    case ErrorKind::admissibility_violation: return "admissibility-violation";
    case ErrorKind::range_violation: return "range-violation";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
    case ErrorKind::invalid_parameters: return "invalid-parameters";
    case ErrorKind::budget_exceeded: return "budget-exceeded";
    case ErrorKind::infeasible_truncation: return "infeasible-truncation";
    case ErrorKind::inconsistency: return "inconsistency";
    case ErrorKind::io_error: return "io-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the kinds above.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace nibc
