#pragma once

#include <stdexcept>
#include <string>

namespace klab {

// Error categories double as the C API's negative return codes.
enum class ErrorCode : int {
  InvalidArgument = 2,
  RedundantTransform = 3,
  TagMismatch = 4,
  BoxTooSmall = 5,
  GridMismatch = 6,
  StorageMode = 7,
  ResolutionGuard = 8,
  Convergence = 9,
  StepTooLarge = 10,
  Io = 11,
  Format = 12,
  Config = 13,
  Budget = 14,
  Regime = 15,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code_(c) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) { throw Error(c, msg); }

inline void require(bool cond, ErrorCode c, const std::string& msg) {
  if (!cond) fail(c, msg);
}

}  // namespace klab
