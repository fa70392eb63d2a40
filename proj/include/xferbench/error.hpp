#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xferbench {

enum class ErrorCode {
  Io,
  Parse,
  MissingField,
  UnknownLabel,
  EmptyFile,
  DegenerateSplit,
  SchemaMismatch,
  MissingLabel,
  MissingExplanation,
  EmptyTarget,
  NonFiniteLoss,
  UnknownDataset,
  UnknownStage,
  NoScorers,
  EmptyReference,
  LengthMismatch,
  EmptyEvalSet,
  MismatchedEvalSplit,
  InvalidConfig,
  CheckpointMismatch,
  RunExists,
};

std::string_view to_string(ErrorCode code);

// Every failure the library reports is an Error carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace xferbench
