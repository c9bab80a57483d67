// SPDX-License-Identifier: Apache-2.0

#include "arguagent/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <regex>
#include <set>
#include <thread>

#include "httplib.h"

#include "arguagent/hashing.hpp"
#include "arguagent/scoring.hpp"

namespace arguagent {

std::string Backend::cluster_reply(const ClusterRequest&) {
  throw Error(ErrorKind::BackendUnavailable, "backend '" + name() + "' cannot cluster positions");
}

BackendConfig BackendConfig::from_environment() {
  BackendConfig c;
  const auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("ARGUAGENT_API_KEY")) c.api_key = *v;
  if (auto v = env("ARGUAGENT_BASE_URL")) c.base_url = *v;
  if (auto v = env("ARGUAGENT_MODEL")) c.model_name = *v;
  return c;
}

void to_json(Json& j, const BackendConfig& v) {
  j = Json{{"base_url", v.base_url},
           {"model_name", v.model_name},
           {"timeout_seconds", v.timeout_seconds},
           {"max_retries", v.max_retries},
           {"temperature", v.temperature}};
}

void from_json(const Json& j, BackendConfig& v) {
  static const std::set<std::string> kKeys{"base_url", "model_name", "timeout_seconds", "max_retries",
                                           "temperature"};
  for (const auto& [key, value] : j.items()) {
    if (key == "api_key") {
      throw Error(ErrorKind::ParseError, "api_key is read from ARGUAGENT_API_KEY, not from files");
    }
    if (!kKeys.contains(key)) throw Error(ErrorKind::ParseError, "unknown backend config key '" + key + "'");
  }
  const std::string key = std::move(v.api_key);
  v = BackendConfig{};
  v.api_key = key;
  v.base_url = j.value("base_url", v.base_url);
  v.model_name = j.value("model_name", v.model_name);
  v.timeout_seconds = j.value("timeout_seconds", v.timeout_seconds);
  v.max_retries = j.value("max_retries", v.max_retries);
  v.temperature = j.value("temperature", v.temperature);
}

namespace {

Json messages_json(const std::vector<ChatMessage>& messages) {
  Json out = Json::array();
  for (const auto& m : messages) out.push_back({{"role", m.role}, {"content", m.content}});
  return out;
}

class LiveBackend final : public Backend {
 public:
  explicit LiveBackend(BackendConfig config) : config_(std::move(config)) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.base_url, m, kUrl)) {
      throw Error(ErrorKind::InvalidArgument, "base_url must look like https://host[:port][/path]");
    }
    origin_ = m[1].str();
    path_ = m[2].str();
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/chat/completions";
  }

  std::string name() const override { return "live:" + config_.model_name; }

  std::string score_reply(const ScoreRequest& request) override { return chat(request.messages); }
  std::string cluster_reply(const ClusterRequest& request) override { return chat(request.messages); }

 private:
  std::string chat(const std::vector<ChatMessage>& messages) const {
    if (config_.api_key.empty()) {
      throw Error(ErrorKind::BackendUnavailable, "ARGUAGENT_API_KEY is not set");
    }
    const Json body{{"model", config_.model_name},
                    {"temperature", config_.temperature},
                    {"messages", messages_json(messages)}};
    const std::string payload = body.dump();

    httplib::Client client(origin_);
    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_bearer_token_auth(config_.api_key);

    std::string failure;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(500 << std::min(attempt, 5)));
      const auto res = client.Post(path_, payload, "application/json");
      if (!res) {
        failure = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        failure = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorKind::BackendUnavailable,
                    "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
      }
      try {
        const auto reply = Json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorKind::BackendUnavailable, "unexpected chat-completions response envelope");
      }
    }
    throw Error(ErrorKind::BackendUnavailable, failure + " after " +
                                                   std::to_string(config_.max_retries + 1) + " attempt(s)");
  }

  BackendConfig config_;
  std::string origin_;
  std::string path_;
};

class CachingBackend final : public Backend {
 public:
  CachingBackend(std::unique_ptr<Backend> inner, std::filesystem::path dir)
      : inner_(std::move(inner)), dir_(std::move(dir)) {}

  std::string name() const override { return inner_->name(); }

  std::string score_reply(const ScoreRequest& request) override {
    if (request.attempt != 0) return inner_->score_reply(request);
    const auto path = dir_ / sha256_hex(inner_->name() + "\n" + request.prompt.hash()).substr(0, 16) /
                      (sha256_hex(request.response_text) + ".json");
    return cached(path, [&] { return inner_->score_reply(request); });
  }

  std::string cluster_reply(const ClusterRequest& request) override {
    if (request.attempt != 0) return inner_->cluster_reply(request);
    const auto path = dir_ / "cluster" /
                      (sha256_hex(inner_->name() + "\n" + messages_json(request.messages).dump()) + ".json");
    return cached(path, [&] { return inner_->cluster_reply(request); });
  }

 private:
  static std::string cached(const std::filesystem::path& path, const std::function<std::string()>& call) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(path, ec)) {
      std::ifstream in(path, std::ios::binary);
      const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const auto stored = Json::parse(text, nullptr, false);
      // an unreadable entry is treated as a miss and overwritten
      if (stored.is_string()) return stored.get<std::string>();
    }
    std::string reply = call();
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open ||
        !Json::accept(reply.substr(open, close - open + 1))) {
      return reply;
    }
    std::filesystem::create_directories(path.parent_path(), ec);
    const auto tmp = path.string() + ".tmp." +
                     std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << Json(reply).dump();
      if (!out) return reply;
    }
    std::filesystem::rename(tmp, path, ec);
    return reply;
  }

  std::unique_ptr<Backend> inner_;
  std::filesystem::path dir_;
};

}  // namespace

std::unique_ptr<Backend> live_backend(BackendConfig config) {
  return std::make_unique<LiveBackend>(std::move(config));
}

std::unique_ptr<Backend> caching_backend(std::unique_ptr<Backend> inner, std::filesystem::path directory) {
  return std::make_unique<CachingBackend>(std::move(inner), std::move(directory));
}

}  // namespace arguagent
