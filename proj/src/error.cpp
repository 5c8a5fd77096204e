#include "sector/error.hpp"

namespace sector {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::internal: return "internal";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::encoding: return "encoding";
    case ErrorCode::transport: return "transport";
    case ErrorCode::timeout: return "timeout";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::access_denied: return "access-denied";
    case ErrorCode::integrity: return "integrity";
    case ErrorCode::range: return "range";
    case ErrorCode::already_exists: return "already-exists";
    case ErrorCode::busy: return "busy";
    case ErrorCode::job_failed: return "job-failed";
    case ErrorCode::config: return "config";
    case ErrorCode::validation: return "validation";
  }
  return "unknown";
}

}  // namespace sector
