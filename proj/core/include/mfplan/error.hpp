#pragma once

#include <stdexcept>
#include <string>

namespace mfp {

enum class ErrorCode {
  invalid_argument,
  parse,
  coverage,
  convergence,
  divergence,
  absolute_continuity,
  full_range,
  grid_mismatch,
  non_finite,
  io,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception type thrown by every stage of the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mfp
