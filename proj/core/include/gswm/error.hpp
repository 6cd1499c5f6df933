#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gswm {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kValidation,
  kParse,
  kIo,
  kDivergence,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for every contract violation in the library; the
/// code lets callers (and the CLI) distinguish failure classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace gswm
