#pragma once

#include <stdexcept>
#include <string>

namespace relaynet {

enum class ErrorCode {
  InvalidArgument,
  Dimension,
  Numeric,
  InfeasibleDistribution,
  MissingValueFunction,
  NoSuccessfulRollouts,
  DegenerateLabels,
  ConstructionAbandoned,
  Config,
  Io,
  Version,
  Corrupt,
};

const char* to_string(ErrorCode code);

/// Base exception for everything the library throws.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace relaynet
