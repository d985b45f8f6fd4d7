#pragma once

#include <stdexcept>
#include <string>

namespace admc {

enum class ErrorCode {
  kZeroDirection,
  kZeroVector,
  kFrameMismatch,
  kIndexOutOfRange,
  kDuplicateIndex,
  kDimensionMismatch,
  kInvalidConfig,
  kIo,
  kMissingHeader,
  kParse,
  kVersionMismatch,
  kProtocol,
  kDisconnected,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace admc
