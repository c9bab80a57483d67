// SPDX-License-Identifier: Apache-2.0
//
// Model backends. A backend turns a chat-style request into the raw text of
// the model's reply; parsing and validation happen in the caller so that
// live and offline backends share one code path.

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "arguagent/json_io.hpp"

namespace arguagent {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;
};

struct ScoringPrompt;

struct ScoreRequest {
  const ScoringPrompt& prompt;
  std::string response_text;
  std::vector<ChatMessage> messages;
  int attempt = 0;  // 0 for the first call, then one per repair retry
};

struct ClusterClaim {
  std::string student_id;
  std::string claim;
};

struct ClusterRequest {
  std::vector<ClusterClaim> claims;
  std::vector<ChatMessage> messages;
  int attempt = 0;
};

/// Implementations must be safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual std::string score_reply(const ScoreRequest& request) = 0;
  /// Default: Error(BackendUnavailable), i.e. the backend cannot cluster.
  virtual std::string cluster_reply(const ClusterRequest& request);
};

struct BackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4o";
  std::string api_key;  // never serialized
  double timeout_seconds = 60.0;
  int max_retries = 2;  // transport-level retries (429, 5xx, connection errors)
  double temperature = 0.0;

  /// Defaults overlaid with ARGUAGENT_API_KEY, ARGUAGENT_BASE_URL and
  /// ARGUAGENT_MODEL when set.
  static BackendConfig from_environment();
};

/// to_json omits api_key; from_json rejects a document that contains one.
void to_json(Json& j, const BackendConfig& v);
void from_json(const Json& j, BackendConfig& v);

/// HTTP chat-completions client (POST {base_url}/chat/completions, bearer
/// token). Failures after retries surface as Error(BackendUnavailable).
std::unique_ptr<Backend> live_backend(BackendConfig config);

/// Wraps a backend with an on-disk reply cache keyed by (prompt hash, text
/// hash). Only first-attempt replies that parse as a JSON object are stored.
std::unique_ptr<Backend> caching_backend(std::unique_ptr<Backend> inner,
                                         std::filesystem::path directory);

}  // namespace arguagent
