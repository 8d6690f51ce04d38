#include "safer/backends.hpp"

#include "safer/error.hpp"
#include "safer/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace safer {

namespace fs = std::filesystem;

const std::string& ChatRequest::user_prompt() const {
  static const std::string empty;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return empty;
}

// ---------------------------------------------------------------- http

namespace {

bool contains_ci(std::string_view hay, std::string_view needle) {
  return text::to_upper(std::string(hay)).find(text::to_upper(std::string(needle))) !=
         std::string::npos;
}

bool length_rejection(int status, const std::string& body) {
  if (status == 413) return true;
  if (status != 400) return false;
  return contains_ci(body, "context_length") || contains_ci(body, "maximum context") ||
         contains_ci(body, "too long") || contains_ci(body, "too many tokens");
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  if (options_.api_key.empty()) {
    throw Error(ErrorCode::AuthMissing, "http backend needs an API key");
  }
  const std::string& url = options_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::Transport, "endpoint is not an absolute URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? std::string{} : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  static constexpr std::string_view kSuffix = "/chat/completions";
  if (path.size() < kSuffix.size() ||
      path.compare(path.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) {
    path += kSuffix;
  }
  path_ = path;
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
  nlohmann::json body;
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(options_.connect_timeout);
  client.set_read_timeout(options_.read_timeout);
  client.set_bearer_token_auth(options_.api_key);

  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::Transport,
                "request to " + scheme_host_port_ + path_ + " failed: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 429) {
    throw Error(ErrorCode::RateLimited, "backend returned 429", {res->body});
  }
  if (status >= 500) {
    throw Error(ErrorCode::Transport, "backend returned " + std::to_string(status), {res->body});
  }
  if (length_rejection(status, res->body)) {
    throw Error(ErrorCode::ChunkTooLarge, "backend rejected the prompt for length", {res->body});
  }
  if (status == 401 || status == 403) {
    throw Error(ErrorCode::BackendRejected, "backend refused credentials (" + std::to_string(status) + ")");
  }
  if (status < 200 || status >= 300) {
    throw Error(ErrorCode::BackendRejected, "backend returned " + std::to_string(status), {res->body});
  }

  auto doc = nlohmann::json::parse(res->body, nullptr, false);
  if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty()) {
    throw Error(ErrorCode::Transport, "unreadable completion body", {res->body.substr(0, 200)});
  }
  const auto& message = doc["choices"][0]["message"];
  ChatResponse out;
  if (message.is_object() && message.contains("content") && message["content"].is_string()) {
    out.content = message["content"].get<std::string>();
  }
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const auto& u = doc["usage"];
    TokenUsage usage;
    usage.prompt_tokens = u.value("prompt_tokens", 0L);
    usage.completion_tokens = u.value("completion_tokens", 0L);
    usage.total_tokens = u.value("total_tokens", usage.prompt_tokens + usage.completion_tokens);
    out.usage = usage;
  }
  return out;
}

// ---------------------------------------------------------------- mock

MockBackend::MockBackend(fs::path dir) : dir_(std::move(dir)) {
  const fs::path rules = dir_ / "rules.tsv";
  if (!fs::exists(rules)) return;
  for (const auto& line : text::split_lines(text::read_file(rules))) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (auto tab = line.find('\t'); tab != std::string::npos; tab = line.find('\t', start)) {
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    std::string file{text::trim(std::string_view(line).substr(start))};
    if (fields.empty() || file.empty()) continue;
    if (std::any_of(fields.begin(), fields.end(), [](const std::string& k) { return k.empty(); })) continue;
    rules_.push_back(Rule{std::move(fields), fs::path(file)});
  }
}

fs::path MockBackend::fixture_path(std::string_view prompt) const {
  return dir_ / "fixtures" / (text::sha256_hex(prompt) + ".json");
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
  const std::string& prompt = request.user_prompt();
  const fs::path exact = fixture_path(prompt);
  if (fs::exists(exact)) return ChatResponse{text::read_file(exact), std::nullopt};

  for (const auto& [keywords, file] : rules_) {
    bool all = std::all_of(keywords.begin(), keywords.end(),
                           [&](const std::string& k) { return prompt.find(k) != std::string::npos; });
    if (!all) continue;
    fs::path p = dir_ / file;
    if (!fs::exists(p)) p = dir_ / "fixtures" / file;
    return ChatResponse{text::read_file(p), std::nullopt};
  }
  throw Error(ErrorCode::NotFixtured, "no fixture for prompt",
              {"sha256 " + text::sha256_hex(prompt), "expected " + exact.string()});
}

// ---------------------------------------------------------------- keys

std::string resolve_api_key(const std::optional<fs::path>& key_file, const std::string& env_var) {
  if (key_file && fs::exists(*key_file)) {
    for (const auto& line : text::split_lines(text::read_file(*key_file))) {
      auto key = text::trim(line);
      if (!key.empty()) return std::string(key);
    }
  }
  if (const char* env = std::getenv(env_var.c_str()); env != nullptr && *env != '\0') {
    return std::string(text::trim(env));
  }
  std::vector<std::string> tried;
  if (key_file) tried.push_back("key file " + key_file->string());
  tried.push_back("environment variable " + env_var);
  throw Error(ErrorCode::AuthMissing, "no API key found", std::move(tried));
}

}  // namespace safer
