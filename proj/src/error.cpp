#include "glt/error.hpp"

namespace glt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::SplitOverlap: return "SplitOverlap";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DegenerateConfig: return "DegenerateConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyIndexSet: return "EmptyIndexSet";
    case ErrorCode::NotBackwarded: return "NotBackwarded";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyActiveSet: return "EmptyActiveSet";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::SetViolation: return "SetViolation";
    case ErrorCode::DegenerateMasks: return "DegenerateMasks";
    case ErrorCode::BaselineDivergence: return "BaselineDivergence";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::UniverseMismatch: return "UniverseMismatch";
  }
  return "Unknown";
}

}  // namespace glt
