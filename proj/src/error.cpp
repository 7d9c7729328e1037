#include "heatcast/error.hpp"

namespace heatcast {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SingleIterationStall: return "SingleIterationStall";
    case ErrorCode::ZeroInfluence: return "ZeroInfluence";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::AlphaTooSmall: return "AlphaTooSmall";
    case ErrorCode::UnboundedRegion: return "UnboundedRegion";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConstantSample: return "ConstantSample";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::UnknownStation: return "UnknownStation";
  }
  return "Unknown";
}

}  // namespace heatcast
