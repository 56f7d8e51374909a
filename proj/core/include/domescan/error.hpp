#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace domescan {

enum class ErrorCode {
  MalformedDocument,
  SchemaViolation,
  InvariantViolation,
  BadMagic,
  UnsupportedVersion,
  UnsupportedDtype,
  TruncatedPacket,
  TruncatedFile,
  DimOverflow,
  BeamCountMismatch,
  BindFailure,
  InsufficientFrames,
  IndexOutOfRange,
  DimensionMismatch,
  MissingPoints,
  TooFewFrames,
  UnknownChannel,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a code so callers can decide
/// between dropping an input and aborting, plus the offending field or path.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string subject, std::string detail = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace domescan
