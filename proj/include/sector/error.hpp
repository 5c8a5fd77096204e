#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sector {

enum class ErrorCode : std::uint8_t {
  internal = 0,
  invalid_argument,
  encoding,
  transport,
  timeout,
  not_found,
  access_denied,
  integrity,
  range,
  already_exists,
  busy,
  job_failed,
  config,
  validation,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure that crosses a module boundary is reported as an Error.
/// The code survives the wire: a remote handler's Error is rethrown on the
/// caller with the same code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sector
