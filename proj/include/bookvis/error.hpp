#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bookvis {

enum class ErrorCode {
  io,
  not_found,
  validation,
  conflict,
  decode,
  too_large,
  format,
  empty_catalog,
  invalid_genre,
  training,
  not_finalized,
  contract,
  empty_library,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for every domain failure; `code()` drives the HTTP
/// status in the service and the exit status in the CLI.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bookvis
