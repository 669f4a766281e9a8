#include "afpb/error.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace afpb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptData: return "CorruptData";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InsufficientSize: return "InsufficientSize";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InfeasibleGeometry: return "InfeasibleGeometry";
    case ErrorCode::MissingBranch: return "MissingBranch";
    case ErrorCode::UnparsableIdentity: return "UnparsableIdentity";
    case ErrorCode::TooFewIdentities: return "TooFewIdentities";
    case ErrorCode::InsufficientShots: return "InsufficientShots";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownProbeIdentity: return "UnknownProbeIdentity";
    case ErrorCode::DimMismatch: return "DimMismatch";
  }
  return "Unknown";
}

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler h = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return h;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  return std::exchange(handler_slot(), std::move(handler));
}

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (handler_slot()) handler_slot()(message);
}

}  // namespace afpb
