#pragma once

#include <stdexcept>
#include <string>

namespace dupin {

enum class ErrorCode {
  InvalidArgument,
  NonUniformGrid,
  AxisOutOfRange,
  GridTooSmall,
  GridMismatch,
  NotSymmetric,
  DegenerateCloud,
  ZeroLame,
  NotParallel,
  BlowUp,
  LameVanishes,
  FrameDrift,
  PhiVanishes,
  DegenerateD,
  PhiFZero,
  RankZero,
  NotCanonical,
  LambdaZero,
  ThroughOrigin,
  DegenerateOffset,
  NotSubstantial,
  NotOnQuadric,
  FocalDegeneracy,
  AxisIncidence,
  DimensionMismatch,
  TooFewNodes,
  NotProper,
  RankDeficient,
  ParseError,
  StepFailure,
  UnsupportedSlice,
};

const char* to_string(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace dupin
