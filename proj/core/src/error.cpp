#include "domescan/error.hpp"

namespace domescan {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedPacket: return "TruncatedPacket";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DimOverflow: return "DimOverflow";
    case ErrorCode::BeamCountMismatch: return "BeamCountMismatch";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::InsufficientFrames: return "InsufficientFrames";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingPoints: return "MissingPoints";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& subject,
                           const std::string& detail) {
  std::string msg{to_string(code)};
  msg += "(\"";
  msg += subject;
  msg += "\")";
  if (!detail.empty()) {
    msg += ": ";
    msg += detail;
  }
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, std::string subject, std::string detail)
    : std::runtime_error(format_message(code, subject, detail)),
      code_(code),
      subject_(std::move(subject)) {}

}  // namespace domescan
