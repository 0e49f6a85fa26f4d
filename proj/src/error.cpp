#include "povpool/error.hpp"

namespace povpool {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::IoError: return "IoError";
    case Errc::MetaMissing: return "MetaMissing";
    case Errc::SourceGap: return "SourceGap";
    case Errc::ParseError: return "ParseError";
    case Errc::BadParameter: return "BadParameter";
    case Errc::EmptyWindow: return "EmptyWindow";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::PromptError: return "PromptError";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::TruncatedClip: return "TruncatedClip";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::WeightMismatch: return "WeightMismatch";
    case Errc::IncompletePipeline: return "IncompletePipeline";
    case Errc::ShapeError: return "ShapeError";
  }
  return "UnknownError";
}

int errc_exit_code(Errc code) {
  switch (code) {
    case Errc::IoError:
    case Errc::MetaMissing:
    case Errc::SourceGap:
    case Errc::ParseError:
      return 1;
    case Errc::BadParameter:
    case Errc::EmptyWindow:
    case Errc::EmptySequence:
    case Errc::EmptyBatch:
    case Errc::PromptError:
    case Errc::DimMismatch:
    case Errc::ZeroVector:
      return 2;
    case Errc::TruncatedClip:
    case Errc::DimensionMismatch:
    case Errc::WeightMismatch:
    case Errc::IncompletePipeline:
    case Errc::ShapeError:
      return 3;
  }
  return 3;
}

}  // namespace povpool
