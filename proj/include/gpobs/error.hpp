#pragma once

#include <stdexcept>
#include <string>

namespace gpobs {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  parse_error,
  io_error,
  unstable,
  singular,
};

// All library failures surface as gpobs::Error; the C API maps the code to a
// status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gpobs
