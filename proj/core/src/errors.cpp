#include "dupin/errors.hpp"

namespace dupin {

const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonUniformGrid: return "NonUniformGrid";
    case ErrorCode::AxisOutOfRange: return "AxisOutOfRange";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::ZeroLame: return "ZeroLame";
    case ErrorCode::NotParallel: return "NotParallel";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::LameVanishes: return "LameVanishes";
    case ErrorCode::FrameDrift: return "FrameDrift";
    case ErrorCode::PhiVanishes: return "PhiVanishes";
    case ErrorCode::DegenerateD: return "DegenerateD";
    case ErrorCode::PhiFZero: return "PhiFZero";
    case ErrorCode::RankZero: return "RankZero";
    case ErrorCode::NotCanonical: return "NotCanonical";
    case ErrorCode::LambdaZero: return "LambdaZero";
    case ErrorCode::ThroughOrigin: return "ThroughOrigin";
    case ErrorCode::DegenerateOffset: return "DegenerateOffset";
    case ErrorCode::NotSubstantial: return "NotSubstantial";
    case ErrorCode::NotOnQuadric: return "NotOnQuadric";
    case ErrorCode::FocalDegeneracy: return "FocalDegeneracy";
    case ErrorCode::AxisIncidence: return "AxisIncidence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooFewNodes: return "TooFewNodes";
    case ErrorCode::NotProper: return "NotProper";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::UnsupportedSlice: return "UnsupportedSlice";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace dupin
