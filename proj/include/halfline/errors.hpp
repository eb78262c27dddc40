#pragma once

#include <stdexcept>
#include <string>

namespace halfline {

/// Error categories surfaced through the C API as status codes.
enum class ErrorCode : int {
  InvalidArgument = 1,
  TruncationMismatch = 2,
  Overflow = 3,
  QuadratureNonconvergence = 4,
  NonContraction = 5,
  MaxIterations = 6,
  Domain = 7,
  Internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace halfline
