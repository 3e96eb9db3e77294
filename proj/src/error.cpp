#include "dtpo/error.hpp"

namespace dtpo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidAction: return "invalid-action";
    case ErrorCode::SteppedFinishedEpisode: return "stepped-finished-episode";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::EmptyDataset: return "empty-dataset";
    case ErrorCode::MalformedInput: return "malformed-input";
    case ErrorCode::UnknownEnvironment: return "unknown-environment";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace dtpo
