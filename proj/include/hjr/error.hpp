#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hjr {

enum class ErrorCode {
  NonSPD,
  NonFinite,
  DimensionMismatch,
  InvalidArgument,
  NotPerfectSquare,
  OutOfDomain,
  RootBracketFailure,
  ZeroReference,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `code()` tells callers which
/// failure class occurred; numerical failures additionally carry the
/// operation name and, when raised inside an integrator, the step index.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string operation, std::string detail,
        std::optional<std::size_t> step = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::string& operation() const noexcept { return operation_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::size_t> step() const noexcept { return step_; }

  bool is_numerical() const noexcept {
    return code_ == ErrorCode::NonSPD || code_ == ErrorCode::NonFinite;
  }

  /// Same error re-labelled with an outer operation name.
  Error rethrown_as(std::string operation) const;

 private:
  ErrorCode code_;
  std::string operation_;
  std::string detail_;
  std::optional<std::size_t> step_;
};

}  // namespace hjr
