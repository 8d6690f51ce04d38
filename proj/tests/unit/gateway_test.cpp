#include "safer/backends.hpp"
#include "safer/error.hpp"
#include "safer/gateway.hpp"
#include "safer/text.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

using namespace safer;
using namespace std::chrono_literals;
using safer::testing::Gen;
using safer::testing::TempDir;

namespace {

// Plays back a scripted sequence of outcomes; anything after the script echoes.
class ScriptedBackend final : public LlmBackend {
 public:
  struct Step {
    std::optional<ErrorCode> error;
    std::string content;
  };
  explicit ScriptedBackend(std::deque<Step> steps) : steps_(std::move(steps)) {}

  ChatResponse complete(const ChatRequest& request) override {
    std::lock_guard lock(mu_);
    ++calls;
    last_request = request;
    if (steps_.empty()) return {"{\"results\":[{\"echo\":\"" + request.user_prompt() + "\"}]}", std::nullopt};
    Step s = steps_.front();
    steps_.pop_front();
    if (s.error) throw Error(*s.error, "scripted");
    return {s.content, TokenUsage{3, 4, 7}};
  }
  [[nodiscard]] std::string_view name() const noexcept override { return "scripted"; }

  int calls = 0;
  ChatRequest last_request;

 private:
  std::mutex mu_;
  std::deque<Step> steps_;
};

// Echoes the prompt after a random delay so completion order is shuffled.
class JitterBackend final : public LlmBackend {
 public:
  explicit JitterBackend(std::uint32_t seed) : gen_(seed) {}
  ChatResponse complete(const ChatRequest& request) override {
    long delay;
    {
      std::lock_guard lock(mu_);
      delay = gen_.range(0, 3);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    return {"{\"results\":[{\"p\":\"" + request.user_prompt() + "\"}]}", std::nullopt};
  }
  [[nodiscard]] std::string_view name() const noexcept override { return "jitter"; }

 private:
  std::mutex mu_;
  Gen gen_;
};

struct SleepLog {
  std::vector<std::chrono::milliseconds> sleeps;
  LlmGateway::Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
  }
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no safer::Error thrown";
  return ErrorCode::IoFailure;
}

}  // namespace

TEST(Gateway, BackoffSchedule) {
  LlmRequestParams p;
  p.max_retries = 3;
  p.initial_backoff = 100ms;
  EXPECT_EQ(p.backoff_schedule(), (std::vector<std::chrono::milliseconds>{100ms, 200ms, 400ms}));
}

TEST(Gateway, RetriesTransientThenSucceeds) {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Step>{
      {ErrorCode::RateLimited, ""}, {ErrorCode::Transport, ""}, {std::nullopt, "```json\n{\"results\":[{\"a\":1}]}\n```"}});
  SleepLog log;
  LlmGateway gw(backend, {}, log.sleeper());
  auto r = gw.send("hello");
  EXPECT_EQ(r.attempts, 3);
  EXPECT_EQ(r.status, ResultStatus::Ok);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0]["a"], 1);
  EXPECT_EQ(r.prompt_sha256, text::sha256_hex("hello"));
  ASSERT_TRUE(r.usage);
  EXPECT_EQ(r.usage->total_tokens, 7);
  EXPECT_EQ(log.sleeps, (std::vector<std::chrono::milliseconds>{1000ms, 2000ms}));
  EXPECT_EQ(gw.backend_calls(), 3u);
  EXPECT_EQ(backend->last_request.temperature, 0.0);
  ASSERT_EQ(backend->last_request.messages.size(), 2u);
  EXPECT_EQ(backend->last_request.messages[0].role, "system");
}

TEST(Gateway, GivesUpAfterRetries) {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Step>{
      {ErrorCode::Transport, ""}, {ErrorCode::Transport, ""}, {ErrorCode::Transport, ""}, {std::nullopt, "{}"}});
  SleepLog log;
  LlmGateway gw(backend, {}, log.sleeper());
  EXPECT_EQ(code_of([&] { (void)gw.send("x"); }), ErrorCode::Transport);
  EXPECT_EQ(backend->calls, 3);
  EXPECT_EQ(log.sleeps.size(), 2u);
}

TEST(Gateway, NonTransientErrorsAreNotRetried) {
  for (auto code : {ErrorCode::NotFixtured, ErrorCode::ChunkTooLarge, ErrorCode::BackendRejected, ErrorCode::AuthMissing}) {
    auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Step>{{code, ""}});
    SleepLog log;
    LlmGateway gw(backend, {}, log.sleeper());
    EXPECT_EQ(code_of([&] { (void)gw.send("x"); }), code);
    EXPECT_EQ(backend->calls, 1);
    EXPECT_TRUE(log.sleeps.empty());
  }
}

TEST(Gateway, ReplyStatuses) {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Step>{
      {std::nullopt, "Sorry, I cannot help."}, {std::nullopt, "{\"results\":[]}"}, {std::nullopt, "{\"other\":1}"}});
  LlmGateway gw(backend, {}, [](auto) {});
  auto a = gw.send("1");
  EXPECT_EQ(a.status, ResultStatus::ParseFailed);
  EXPECT_FALSE(a.parse_error.empty());
  EXPECT_EQ(gw.send("2").status, ResultStatus::EmptyResults);
  EXPECT_EQ(gw.send("3").status, ResultStatus::ParseFailed);
}

TEST(Gateway, PropertyBatchKeepsInputOrder) {
  Gen gen(2024);
  for (int round = 0; round < 20; ++round) {
    LlmRequestParams p;
    p.max_in_flight = static_cast<std::size_t>(gen.range(1, 8));
    LlmGateway gw(std::make_shared<JitterBackend>(static_cast<std::uint32_t>(round)), p);
    std::vector<std::string> prompts;
    for (long i = 0, n = gen.range(0, 25); i < n; ++i) prompts.push_back("p" + std::to_string(i) + gen.word());
    auto out = gw.send_batch(prompts, "");
    ASSERT_EQ(out.size(), prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      ASSERT_TRUE(out[i].result);
      EXPECT_FALSE(out[i].error);
      EXPECT_EQ(out[i].result->records.at(0)["p"], prompts[i]);
    }
  }
}

TEST(Gateway, BatchIsolatesFailures) {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Step>{
      {std::nullopt, "{\"results\":[{\"a\":1}]}"}, {ErrorCode::NotFixtured, ""}});
  LlmGateway gw(backend, {}, [](auto) {});
  auto out = gw.send_batch({"a", "b", "c"});
  EXPECT_TRUE(out[0].result);
  EXPECT_TRUE(out[1].error);
  EXPECT_FALSE(out[1].result);
  EXPECT_TRUE(out[2].result);
}

TEST(MockBackend, ExactFixtureThenRules) {
  TempDir dir;
  MockBackend probe(dir.path());
  text::write_file(probe.fixture_path("exact prompt"), "exact reply");
  text::write_file(dir / "rules.tsv", "# comment\nalpha\tbeta\ttwo.json\nalpha\tone.json\n");
  text::write_file(dir / "one.json", "one");
  text::write_file(dir / "fixtures/two.json", "two");
  MockBackend mock(dir.path());
  auto ask = [&](const std::string& prompt) {
    ChatRequest r;
    r.messages.push_back({"user", prompt});
    return mock.complete(r).content;
  };
  EXPECT_EQ(ask("exact prompt"), "exact reply");
  EXPECT_EQ(ask("alpha and beta"), "two");
  EXPECT_EQ(ask("only alpha"), "one");
  EXPECT_EQ(code_of([&] { (void)ask("nothing"); }), ErrorCode::NotFixtured);
}

TEST(ApiKey, FileWinsOverEnvironment) {
  TempDir dir;
  text::write_file(dir / "key", "\n  sk-file  \n");
  ::setenv("SAFER_TEST_KEY", "sk-env", 1);
  EXPECT_EQ(resolve_api_key(dir / "key", "SAFER_TEST_KEY"), "sk-file");
  EXPECT_EQ(resolve_api_key(std::nullopt, "SAFER_TEST_KEY"), "sk-env");
  ::unsetenv("SAFER_TEST_KEY");
  EXPECT_EQ(code_of([&] { (void)resolve_api_key(dir / "missing", "SAFER_TEST_KEY"); }), ErrorCode::AuthMissing);
  EXPECT_EQ(code_of([] { HttpBackend(HttpBackendOptions{}); }), ErrorCode::AuthMissing);
}

namespace {

// Local chat-completions stand-in on an ephemeral port.
class LocalServer {
 public:
  explicit LocalServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  [[nodiscard]] std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpBackendOptions local_options(const std::string& endpoint) {
  HttpBackendOptions o;
  o.endpoint = endpoint;
  o.api_key = "sk-test";
  o.connect_timeout = std::chrono::seconds(2);
  o.read_timeout = std::chrono::seconds(5);
  return o;
}

}  // namespace

TEST(HttpBackend, CompletesAgainstLocalServer) {
  std::string seen_auth;
  nlohmann::json seen_body;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = nlohmann::json::parse(req.body);
    res.set_content(
        R"({"choices":[{"message":{"role":"assistant","content":"{\"results\":[{\"ok\":true}]}"}}],)"
        R"("usage":{"prompt_tokens":5,"completion_tokens":2,"total_tokens":7}})",
        "application/json");
  });
  LlmGateway gw(std::make_shared<HttpBackend>(local_options(server.endpoint())));
  auto r = gw.send("classify this");
  EXPECT_EQ(seen_auth, "Bearer sk-test");
  EXPECT_EQ(seen_body["model"], "gpt-4o");
  EXPECT_EQ(seen_body["temperature"], 0.0);
  EXPECT_EQ(seen_body["messages"].back()["content"], "classify this");
  EXPECT_EQ(r.status, ResultStatus::Ok);
  ASSERT_TRUE(r.usage);
  EXPECT_EQ(r.usage->prompt_tokens, 5);
}

TEST(HttpBackend, MapsStatusCodes) {
  int status = 429;
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    res.status = status;
    res.set_content(status == 400 ? R"({"error":{"code":"context_length_exceeded"}})" : "{}", "application/json");
  });
  HttpBackend backend(local_options(server.endpoint()));
  ChatRequest req;
  req.messages.push_back({"user", "x"});
  const std::vector<std::pair<int, ErrorCode>> cases{{429, ErrorCode::RateLimited},
                                                     {503, ErrorCode::Transport},
                                                     {413, ErrorCode::ChunkTooLarge},
                                                     {400, ErrorCode::ChunkTooLarge},
                                                     {401, ErrorCode::BackendRejected},
                                                     {404, ErrorCode::BackendRejected}};
  for (const auto& [s, code] : cases) {
    status = s;
    EXPECT_EQ(code_of([&] { (void)backend.complete(req); }), code) << s;
  }
}

TEST(HttpBackend, UnreachableEndpointRetriesThenFails) {
  // Bind a port, then close it so nothing listens there.
  int port = 0;
  {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    ASSERT_GE(fd, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port = ntohs(addr.sin_port);
    ::close(fd);
  }
  auto backend = std::make_shared<HttpBackend>(local_options("http://127.0.0.1:" + std::to_string(port)));
  SleepLog log;
  LlmGateway gw(backend, {}, log.sleeper());
  EXPECT_EQ(code_of([&] { (void)gw.send("x"); }), ErrorCode::Transport);
  EXPECT_EQ(gw.backend_calls(), 3u);
  EXPECT_EQ(log.sleeps, (std::vector<std::chrono::milliseconds>{1000ms, 2000ms}));
}
