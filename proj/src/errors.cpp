#include "seqsleep/errors.hpp"

namespace seqsleep {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::SampleCountMismatch: return "SampleCountMismatch";
    case ErrorKind::UnknownLabelCode: return "UnknownLabelCode";
    case ErrorKind::MisalignedLightsIndex: return "MisalignedLightsIndex";
    case ErrorKind::UnsupportedRate: return "UnsupportedRate";
    case ErrorKind::WrongEpochLength: return "WrongEpochLength";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::GraphNotEvaluated: return "GraphNotEvaluated";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::TooShortRecording: return "TooShortRecording";
    case ErrorKind::EmptyDecisionSet: return "EmptyDecisionSet";
    case ErrorKind::EmptyConfusion: return "EmptyConfusion";
    case ErrorKind::CohortTooSmall: return "CohortTooSmall";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace seqsleep
