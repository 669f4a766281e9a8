#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace afpb {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  CorruptData,
  OutOfBounds,
  InsufficientSize,
  InvalidArgument,
  InvalidConfig,
  InfeasibleGeometry,
  MissingBranch,
  UnparsableIdentity,
  TooFewIdentities,
  InsufficientShots,
  ShapeMismatch,
  LabelOutOfRange,
  NonFiniteGradient,
  LengthMismatch,
  UnknownProbeIdentity,
  DimMismatch,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix, for wrapping with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Non-fatal diagnostics (degenerate saliency masks, alpha outside (0,1), ...).
using WarningHandler = std::function<void(std::string_view)>;

/// Installs a process-wide handler; returns the previous one. The default
/// handler writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace afpb
