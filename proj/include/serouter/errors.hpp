#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace serouter {

enum class ErrorCode {
  InvalidArgument,
  DuplicateId,
  TierMismatch,
  EmptyInput,
  OracleFailure,
  DegenerateDenominator,
  ProviderFailure,
  DimensionMismatch,
  ZeroVector,
  EmptyTrainingSet,
  NoDecisiveRecords,
  UnsupportedVersion,
  CorruptArtifact,
  EmptyBenchmark,
  TargetUnreachable,
  ZeroTotal,
  JudgeFailure,
  UnparseableVerdict,
  MissingInput,
  StageMismatch,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the toolkit; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Provider-class errors are the ones the CLI maps to exit code 2.
inline bool is_provider_error(ErrorCode code) {
  return code == ErrorCode::OracleFailure || code == ErrorCode::ProviderFailure ||
         code == ErrorCode::JudgeFailure;
}

}  // namespace serouter
