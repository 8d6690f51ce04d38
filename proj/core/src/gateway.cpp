#include "safer/gateway.hpp"

#include "safer/error.hpp"
#include "safer/text.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace safer {

std::vector<std::chrono::milliseconds> LlmRequestParams::backoff_schedule() const {
  std::vector<std::chrono::milliseconds> out;
  double ms = static_cast<double>(initial_backoff.count());
  for (int k = 0; k < max_retries; ++k) {
    out.emplace_back(static_cast<long long>(std::llround(ms)));
    ms *= backoff_multiplier;
  }
  return out;
}

std::string_view to_string(ResultStatus status) noexcept {
  switch (status) {
    case ResultStatus::Ok: return "ok";
    case ResultStatus::EmptyResults: return "empty";
    case ResultStatus::ParseFailed: return "parse-failed";
  }
  return "unknown";
}

void extract_records(LlmResult& result) {
  result.records.clear();
  result.parse_error.clear();
  try {
    auto results = locate_results(result.raw_text);
    if (results.is_array()) {
      for (auto& v : results) result.records.push_back(std::move(v));
    } else if (results.is_object()) {
      for (auto& [key, v] : results.items()) {
        if (v.is_object()) {
          result.records.push_back(v);
        } else {
          // {"NAV": "Drone/Navigation/Navigating"} style maps keep key and value
          result.records.push_back(Record{{"key", key}, {"value", v}});
        }
      }
    } else if (!results.is_null()) {
      result.records.push_back(std::move(results));
    }
    result.status = result.records.empty() ? ResultStatus::EmptyResults : ResultStatus::Ok;
  } catch (const Error& e) {
    result.status = ResultStatus::ParseFailed;
    result.parse_error = e.what();
  }
}

LlmGateway::LlmGateway(std::shared_ptr<LlmBackend> backend, LlmRequestParams params, Sleeper sleeper)
    : backend_(std::move(backend)), params_(std::move(params)), sleeper_(std::move(sleeper)) {
  if (!backend_) throw Error(ErrorCode::InvalidConfig, "gateway needs a backend");
  if (params_.max_retries < 0) params_.max_retries = 0;
  if (params_.max_in_flight == 0) params_.max_in_flight = 1;
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

LlmResult LlmGateway::send(const std::string& prompt, const std::string& system_context) {
  ChatRequest request;
  request.model = params_.model_id;
  request.temperature = params_.temperature;
  if (!system_context.empty()) request.messages.push_back({"system", system_context});
  request.messages.push_back({"user", prompt});

  const auto schedule = params_.backoff_schedule();
  for (int attempt = 0;; ++attempt) {
    ++backend_calls_;
    try {
      ChatResponse response = backend_->complete(request);
      LlmResult result;
      result.raw_text = std::move(response.content);
      result.usage = response.usage;
      result.attempts = attempt + 1;
      result.prompt_sha256 = text::sha256_hex(prompt);
      extract_records(result);
      return result;
    } catch (const Error& e) {
      const bool transient = e.code() == ErrorCode::Transport || e.code() == ErrorCode::RateLimited;
      if (!transient || attempt >= params_.max_retries) throw;
      sleeper_(schedule[static_cast<std::size_t>(attempt)]);
    }
  }
}

std::vector<BatchItem> LlmGateway::send_batch(const std::vector<std::string>& prompts,
                                              const std::string& system_context) {
  std::vector<BatchItem> out(prompts.size());
  auto run_one = [&](std::size_t i) {
    try {
      out[i].result = send(prompts[i], system_context);
    } catch (...) {
      out[i].error = std::current_exception();
    }
  };

  const std::size_t workers = std::min(params_.max_in_flight, prompts.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < prompts.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < prompts.size(); i = next++) run_one(i);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace safer
