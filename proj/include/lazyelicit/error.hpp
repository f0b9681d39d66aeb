#pragma once

#include <stdexcept>
#include <string>

namespace lazyelicit {

enum class ErrorKind {
  invalid_argument,    // malformed or out-of-range input
  dimension_mismatch,  // vector / matrix shapes disagree
  domain,              // attribute value outside a subutility's domain
  invalid_model,       // utility model violates its scaling invariants
  undefined_ratio,     // tradeoff ratio has a zero denominator
  invalid_state,       // operation not allowed in the current session status
  variant_mismatch,    // answer does not fit the pending question
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::domain: return "domain_error";
    case ErrorKind::invalid_model: return "invalid_model";
    case ErrorKind::undefined_ratio: return "undefined_ratio";
    case ErrorKind::invalid_state: return "invalid_state";
    case ErrorKind::variant_mismatch: return "variant_mismatch";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lazyelicit
