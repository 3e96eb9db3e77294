#pragma once

#include <stdexcept>
#include <string>

namespace dtpo {

enum class ErrorCode {
  InvalidArgument,
  InvalidAction,
  SteppedFinishedEpisode,
  DimensionMismatch,
  EmptyDataset,
  MalformedInput,
  UnknownEnvironment,
  Io,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dtpo
