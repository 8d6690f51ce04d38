#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace safer {

enum class ErrorCode {
  // architecture ingest
  UnresolvedName,
  EmptyModel,
  CyclicContainment,
  MalformedXml,
  NoPrimarySystem,
  SchemaViolation,
  // requirements store
  MissingColumn,
  DuplicateReqId,
  EmptyDataset,
  EmptyRequirementText,
  MalformedCsv,
  InvalidChunkSize,
  // llm gateway
  InvalidEnvelope,
  NoJsonFound,
  MissingResultsRoot,
  Transport,
  RateLimited,
  NotFixtured,
  AuthMissing,
  ChunkTooLarge,
  BackendRejected,
  // orchestration
  InvalidConfig,
  UnknownAnalysisFunction,
  MissingUpstream,
  // analyses
  MismatchedIdSets,
  AliasClosureViolation,
  KindConflict,
  EmptyGold,
  NoScores,
  IoFailure,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable code plus optional per-item details
/// (offending names, row numbers, field messages).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::vector<std::string> details = {});

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace safer
