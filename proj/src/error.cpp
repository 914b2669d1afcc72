#include "hjr/error.hpp"

#include <utility>

namespace hjr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSPD: return "NonSPD";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPerfectSquare: return "NotPerfectSquare";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::RootBracketFailure: return "RootBracketFailure";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& operation,
                           const std::string& detail,
                           std::optional<std::size_t> step) {
  std::string msg = std::string(to_string(code)) + " in " + operation;
  if (step) msg += " at step " + std::to_string(*step);
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, std::string operation, std::string detail,
             std::optional<std::size_t> step)
    : std::runtime_error(format_message(code, operation, detail, step)),
      code_(code),
      operation_(std::move(operation)),
      detail_(std::move(detail)),
      step_(step) {}

Error Error::rethrown_as(std::string operation) const {
  return Error(code_, std::move(operation), detail_, step_);
}

}  // namespace hjr
