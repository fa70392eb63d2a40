#include "xferbench/error.hpp"

namespace xferbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::MissingExplanation: return "MissingExplanation";
    case ErrorCode::EmptyTarget: return "EmptyTarget";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::UnknownStage: return "UnknownStage";
    case ErrorCode::NoScorers: return "NoScorers";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::MismatchedEvalSplit: return "MismatchedEvalSplit";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::RunExists: return "RunExists";
  }
  return "Unknown";
}

}  // namespace xferbench
