#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace safer {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  std::vector<ChatMessage> messages;

  /// Content of the last "user" message, the part fixtures are keyed on.
  [[nodiscard]] const std::string& user_prompt() const;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  long total_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::optional<TokenUsage> usage;
};

/// One completion round trip. Implementations throw safer::Error with
/// Transport or RateLimited for retryable failures, and AuthMissing,
/// ChunkTooLarge, BackendRejected, or NotFixtured otherwise.
/// Must be safe to call from several threads at once.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  [[nodiscard]] virtual std::string_view name() const noexcept = 0;
};

struct HttpBackendOptions {
  std::string endpoint = "https://api.openai.com/v1";  ///< base URL or full .../chat/completions URL
  std::string api_key;
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{120};
};

/// OpenAI-compatible chat-completions client.
class HttpBackend final : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  ChatResponse complete(const ChatRequest& request) override;
  [[nodiscard]] std::string_view name() const noexcept override { return "http"; }

 private:
  HttpBackendOptions options_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Replays canned responses from a fixture directory:
///   <dir>/fixtures/<sha256-of-prompt>.json   exact-prompt fixtures
///   <dir>/rules.tsv                          "keyword[<TAB>keyword...]<TAB>file" lines
/// An exact hash match wins; otherwise the first rule whose keywords all occur
/// in the prompt. Fixture files hold the raw model reply text.
class MockBackend final : public LlmBackend {
 public:
  explicit MockBackend(std::filesystem::path dir);
  ChatResponse complete(const ChatRequest& request) override;
  [[nodiscard]] std::string_view name() const noexcept override { return "mock"; }

  /// Path an exact-prompt fixture for `prompt` would live at.
  [[nodiscard]] std::filesystem::path fixture_path(std::string_view prompt) const;

 private:
  std::filesystem::path dir_;
  struct Rule {
    std::vector<std::string> keywords;
    std::filesystem::path file;
  };
  std::vector<Rule> rules_;
};

/// API key from a key file (first non-empty line) or, failing that, the
/// environment variable. The file wins when both exist. Throws AuthMissing.
[[nodiscard]] std::string resolve_api_key(const std::optional<std::filesystem::path>& key_file,
                                          const std::string& env_var = "OPENAI_API_KEY");

}  // namespace safer
