#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace glt {

enum class ErrorCode {
  MissingFile,
  ParseError,
  IndexOutOfRange,
  DuplicateEdge,
  SplitOverlap,
  IoError,
  DegenerateConfig,
  ShapeMismatch,
  EmptyIndexSet,
  NotBackwarded,
  NonFinite,
  NonFiniteLoss,
  InvalidArgument,
  EmptyActiveSet,
  EmptyCandidateSet,
  SetViolation,
  DegenerateMasks,
  BaselineDivergence,
  EmptyRecords,
  UniverseMismatch,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace glt
