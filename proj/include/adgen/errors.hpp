#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adgen {

/// Caller supplied something the operation's preconditions reject.
class InputError : public std::invalid_argument {
public:
  explicit InputError(const std::string &what) : std::invalid_argument(what) {}
};

enum class BackendErrorKind { Timeout, MalformedResponse, ServiceUnavailable, SchemaViolation };

std::string_view to_string(BackendErrorKind kind);

/// Failure reported by (or while talking to) an external model backend.
/// schema_violation is terminal; the other kinds may be retried.
class BackendError : public std::runtime_error {
public:
  BackendError(BackendErrorKind kind, const std::string &detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind),
        detail_(detail) {}

  BackendErrorKind kind() const noexcept { return kind_; }
  const std::string &detail() const noexcept { return detail_; }
  bool retryable() const noexcept { return kind_ != BackendErrorKind::SchemaViolation; }

private:
  BackendErrorKind kind_;
  std::string detail_;
};

inline std::string_view to_string(BackendErrorKind kind) {
  switch (kind) {
  case BackendErrorKind::Timeout:
    return "timeout";
  case BackendErrorKind::MalformedResponse:
    return "malformed_response";
  case BackendErrorKind::ServiceUnavailable:
    return "service_unavailable";
  case BackendErrorKind::SchemaViolation:
    return "schema_violation";
  }
  return "unknown";
}

} // namespace adgen
