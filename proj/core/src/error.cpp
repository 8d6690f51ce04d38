#include "safer/error.hpp"

namespace safer {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnresolvedName: return "UnresolvedName";
    case ErrorCode::EmptyModel: return "EmptyModel";
    case ErrorCode::CyclicContainment: return "CyclicContainment";
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::NoPrimarySystem: return "NoPrimarySystem";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateReqId: return "DuplicateReqId";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyRequirementText: return "EmptyRequirementText";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::InvalidChunkSize: return "InvalidChunkSize";
    case ErrorCode::InvalidEnvelope: return "InvalidEnvelope";
    case ErrorCode::NoJsonFound: return "NoJsonFound";
    case ErrorCode::MissingResultsRoot: return "MissingResultsRoot";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::NotFixtured: return "NotFixtured";
    case ErrorCode::AuthMissing: return "AuthMissing";
    case ErrorCode::ChunkTooLarge: return "ChunkTooLarge";
    case ErrorCode::BackendRejected: return "BackendRejected";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownAnalysisFunction: return "UnknownAnalysisFunction";
    case ErrorCode::MissingUpstream: return "MissingUpstream";
    case ErrorCode::MismatchedIdSets: return "MismatchedIdSets";
    case ErrorCode::AliasClosureViolation: return "AliasClosureViolation";
    case ErrorCode::KindConflict: return "KindConflict";
    case ErrorCode::EmptyGold: return "EmptyGold";
    case ErrorCode::NoScores: return "NoScores";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message,
                    const std::vector<std::string>& details) {
  std::string out{to_string(code)};
  out += ": ";
  out += message;
  for (const auto& d : details) {
    out += "\n  - ";
    out += d;
  }
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::vector<std::string> details)
    : std::runtime_error(compose(code, message, details)),
      code_(code),
      details_(std::move(details)) {}

}  // namespace safer
