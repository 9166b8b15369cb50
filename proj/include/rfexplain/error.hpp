#pragma once

#include <stdexcept>
#include <string>

namespace rfx {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kCapExceeded,
  kUnsatisfiable,
  kIo,
};

// All recoverable failures in the engine are reported as rfx::Error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rfx
