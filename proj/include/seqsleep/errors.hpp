#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqsleep {

enum class ErrorKind {
  MalformedHeader,
  SampleCountMismatch,
  UnknownLabelCode,
  MisalignedLightsIndex,
  UnsupportedRate,
  WrongEpochLength,
  ShapeMismatch,
  GraphNotEvaluated,
  NonFiniteValue,
  TooShortRecording,
  EmptyDecisionSet,
  EmptyConfusion,
  CohortTooSmall,
  InvalidArgument,
  IoError,
};

std::string_view kind_name(ErrorKind kind);

// Every failure surfaced by the library carries a category so the CLI can
// report it by name.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace seqsleep
