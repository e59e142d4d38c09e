#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace orientpipe {

enum class Errc {
  // input shape / I/O
  Io,
  Parse,
  InvalidConfig,
  InvalidArgument,
  DimensionMismatch,
  LengthMismatch,
  EmptyInput,
  IndexOutOfRange,
  UnsortedInput,
  EmptyCrop,
  TooFewSamples,
  TooFewPoints,
  DomainMismatch,
  // numerical / degenerate
  DegenerateConfiguration,
  PointAtInfinity,
  DegenerateZeroVector,
  DegenerateMean,
  GimbalProjectionDegenerate,
  NoCoverage,
  DivergenceDetected,
};

inline constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::UnsortedInput: return "UnsortedInput";
    case Errc::EmptyCrop: return "EmptyCrop";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::DomainMismatch: return "DomainMismatch";
    case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
    case Errc::PointAtInfinity: return "PointAtInfinity";
    case Errc::DegenerateZeroVector: return "DegenerateZeroVector";
    case Errc::DegenerateMean: return "DegenerateMean";
    case Errc::GimbalProjectionDegenerate: return "GimbalProjectionDegenerate";
    case Errc::NoCoverage: return "NoCoverage";
    case Errc::DivergenceDetected: return "DivergenceDetected";
  }
  return "Unknown";
}

// Process exit status for a failure: 1 for I/O or input-shape problems,
// 2 for mathematical or degenerate configurations.
inline constexpr int exit_code(Errc code) {
  switch (code) {
    case Errc::InvalidConfig:
    case Errc::DegenerateConfiguration:
    case Errc::PointAtInfinity:
    case Errc::DegenerateZeroVector:
    case Errc::DegenerateMean:
    case Errc::GimbalProjectionDegenerate:
    case Errc::NoCoverage:
    case Errc::DivergenceDetected:
    case Errc::TooFewPoints:
      return 2;
    default:
      return 1;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace orientpipe
