#pragma once

#include "safer/backends.hpp"
#include "safer/results_json.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace safer {

struct LlmRequestParams {
  std::string model_id = "gpt-4o";
  double temperature = 0.0;
  int max_retries = 2;  ///< extra attempts after the first
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_multiplier = 2.0;
  std::size_t max_in_flight = 1;

  /// Sleep before retry k (0-based): initial_backoff * multiplier^k.
  [[nodiscard]] std::vector<std::chrono::milliseconds> backoff_schedule() const;
};

enum class ResultStatus {
  Ok,            ///< results container held at least one record
  EmptyResults,  ///< valid reply, empty results container
  ParseFailed,   ///< no JSON or no "results" root
};

[[nodiscard]] std::string_view to_string(ResultStatus status) noexcept;

struct LlmResult {
  std::string raw_text;
  std::vector<Record> records;  ///< objects under "results", in reply order
  ResultStatus status = ResultStatus::ParseFailed;
  std::string parse_error;
  std::optional<TokenUsage> usage;
  int attempts = 0;
  std::string prompt_sha256;
};

/// Fills records/status of `result` from its raw_text.
void extract_records(LlmResult& result);

/// Outcome of one prompt in a batch. Exactly one of result / error is set.
struct BatchItem {
  std::optional<LlmResult> result;
  std::exception_ptr error;
};

inline constexpr const char* kDefaultSystemContext =
    "You are a safety engineering assistant. Answer only with the JSON structure requested.";

/// Shareable front door to a backend: retries transient failures with
/// exponential backoff and dispatches batches with bounded parallelism.
class LlmGateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit LlmGateway(std::shared_ptr<LlmBackend> backend, LlmRequestParams params = {},
                      Sleeper sleeper = {});

  /// Throws Transport / RateLimited once retries are exhausted; other backend
  /// errors (NotFixtured, AuthMissing, ChunkTooLarge, BackendRejected) are
  /// raised on first occurrence. A reply without usable JSON is not an error:
  /// status reports it.
  LlmResult send(const std::string& prompt, const std::string& system_context = kDefaultSystemContext);

  /// Results come back in input order whatever the completion order.
  std::vector<BatchItem> send_batch(const std::vector<std::string>& prompts,
                                    const std::string& system_context = kDefaultSystemContext);

  /// Backend round trips attempted so far, retries included.
  [[nodiscard]] std::size_t backend_calls() const noexcept { return backend_calls_.load(); }
  [[nodiscard]] const LlmRequestParams& params() const noexcept { return params_; }
  [[nodiscard]] const LlmBackend& backend() const noexcept { return *backend_; }

 private:
  std::shared_ptr<LlmBackend> backend_;
  LlmRequestParams params_;
  Sleeper sleeper_;
  std::atomic<std::size_t> backend_calls_{0};
};

}  // namespace safer
