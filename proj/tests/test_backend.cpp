// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"

#include "arguagent/backend.hpp"
#include "arguagent/scoring.hpp"

using namespace arguagent;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("arguagent-test-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_all(const fs::path& dir) {
  std::string all;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path());
    all += std::string(std::istreambuf_iterator<char>(in), {});
  }
  return all;
}

/// Minimal chat-completions endpoint. Fails the first `failures` calls
/// with `fail_status`.
struct MockChat {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> calls{0};
  int failures = 0;
  int fail_status = 500;
  std::string seen_auth;
  Json seen_body;
  std::string content = R"({"level": 0, "explanation": "off topic", "claim": ""})";

  MockChat() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = calls++;
      seen_auth = req.get_header_value("Authorization");
      seen_body = Json::parse(req.body);
      if (n < failures) {
        res.status = fail_status;
        return;
      }
      const Json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockChat() {
    server.stop();
    thread.join();
  }

  BackendConfig config() const {
    BackendConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    c.model_name = "mock-model";
    c.api_key = "sk-test-secret";
    c.timeout_seconds = 5;
    return c;
  }
};

}  // namespace

TEST_CASE("backend config never carries the key") {
  BackendConfig c;
  c.api_key = "sk-very-secret";
  const auto text = Json(c).dump();
  CHECK(text.find("sk-very-secret") == std::string::npos);
  CHECK(text.find("api_key") == std::string::npos);
  CHECK_THROWS_AS(Json::parse(R"({"api_key": "x"})").get<BackendConfig>(), Error);
  CHECK_THROWS_AS(Json::parse(R"({"mystery": 1})").get<BackendConfig>(), Error);
  const auto back = Json::parse(text).get<BackendConfig>();
  CHECK(back.model_name == c.model_name);
  CHECK(back.api_key.empty());
}

TEST_CASE("live backend against a local endpoint") {
  MockChat mock;
  const auto prompt = build_prompt("t", true);
  const StudentResponse r{"s1", "Video B was my favorite one.", ""};

  SUBCASE("request shape and auth") {
    auto backend = live_backend(mock.config());
    CHECK(score_response(r, prompt, *backend).level.value() == 0);
    CHECK(mock.seen_auth == "Bearer sk-test-secret");
    CHECK(mock.seen_body.at("model") == "mock-model");
    CHECK(mock.seen_body.at("temperature") == 0.0);
    CHECK(mock.seen_body.at("messages").size() == 2);
    CHECK(mock.seen_body.at("messages")[0].at("role") == "system");
  }
  SUBCASE("server errors are retried") {
    mock.failures = 1;
    auto backend = live_backend(mock.config());
    CHECK(score_response(r, prompt, *backend).level.value() == 0);
    CHECK(mock.calls == 2);
  }
  SUBCASE("client errors are not") {
    mock.failures = 10;
    mock.fail_status = 401;
    auto backend = live_backend(mock.config());
    CHECK_THROWS_AS(score_response(r, prompt, *backend), Error);
    CHECK(mock.calls == 1);
  }
  SUBCASE("missing key") {
    auto c = mock.config();
    c.api_key.clear();
    try {
      auto backend = live_backend(c);
      score_response(r, prompt, *backend);
      FAIL("expected BackendUnavailable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BackendUnavailable);
    }
    CHECK(mock.calls == 0);
  }
  SUBCASE("unreachable host") {
    auto c = mock.config();
    c.base_url = "http://127.0.0.1:1/v1";
    c.max_retries = 0;
    auto backend = live_backend(c);
    try {
      score_response(r, prompt, *backend);
      FAIL("expected BackendUnavailable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BackendUnavailable);
      CHECK(std::string(e.what()).find("sk-test-secret") == std::string::npos);
    }
  }
}

TEST_CASE("reply cache") {
  MockChat mock;
  const auto dir = fresh_dir("cache");
  const auto prompt = build_prompt("t", true);
  const StudentResponse r{"s1", "Video B was my favorite one.", ""};

  auto backend = caching_backend(live_backend(mock.config()), dir);
  const auto first = score_response(r, prompt, *backend);
  const auto second = score_response(r, prompt, *backend);
  CHECK(first == second);
  CHECK(mock.calls == 1);
  CHECK(read_all(dir).find("sk-test-secret") == std::string::npos);

  // a different prompt is a different key
  const auto other = build_prompt("t", false);
  score_response(r, other, *backend);
  CHECK(mock.calls == 2);

  // non-JSON replies are not stored
  mock.content = "not json";
  const StudentResponse fresh{"s2", "Something new.", ""};
  CHECK_THROWS_AS(score_response(fresh, prompt, *backend, 0), Error);
  CHECK_THROWS_AS(score_response(fresh, prompt, *backend, 0), Error);
  CHECK(mock.calls == 4);
  fs::remove_all(dir);
}
