#pragma once

#include <stdexcept>
#include <string>

namespace rwd {

enum class ErrorCode {
  invalid_position,
  no_match,
  unknown_symbol,
  arity_mismatch,
  invalid_signature,
  invalid_identity,
  non_uniform_depth,
  unmappable_leaf,
  unbound_variable,
  dimension_mismatch,
  carrier_mismatch,
  not_iterable,
  sequence_too_short,
  inexpressible,
  parse_error,
  limit_exceeded,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_position: return "invalid-position";
    case ErrorCode::no_match: return "no-match";
    case ErrorCode::unknown_symbol: return "unknown-symbol";
    case ErrorCode::arity_mismatch: return "arity-mismatch";
    case ErrorCode::invalid_signature: return "invalid-signature";
    case ErrorCode::invalid_identity: return "invalid-identity";
    case ErrorCode::non_uniform_depth: return "non-uniform-depth";
    case ErrorCode::unmappable_leaf: return "unmappable-leaf";
    case ErrorCode::unbound_variable: return "unbound-variable";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::carrier_mismatch: return "carrier-mismatch";
    case ErrorCode::not_iterable: return "not-iterable";
    case ErrorCode::sequence_too_short: return "sequence-too-short";
    case ErrorCode::inexpressible: return "inexpressible";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::limit_exceeded: return "limit-exceeded";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rwd
