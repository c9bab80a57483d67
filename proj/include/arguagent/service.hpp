// SPDX-License-Identifier: Apache-2.0
//
// Class workflow service: ingest -> score -> cluster -> group -> finalize,
// with teacher overrides and one JSON file per class. ClassService is the
// transport-independent core; serve_http puts it behind HTTP.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "arguagent/domain.hpp"
#include "arguagent/json_io.hpp"
#include "arguagent/scoring.hpp"

namespace arguagent::service {

enum class Status { Ingested, Scored, Clustered, Grouped, Finalized };

std::string_view to_string(Status s) noexcept;
std::optional<Status> status_from(std::string_view name) noexcept;

/// Edges of the status machine, self-loops included.
bool legal_transition(Status from, Status to) noexcept;

struct OverrideEntry {
  std::string timestamp;  // UTC, ISO 8601
  std::string actor;
  std::string student_id;  // empty for group edits
  std::string field;       // "level", "cluster_id" or "groups"
  Json old_value;
  Json new_value;

  friend bool operator==(const OverrideEntry&, const OverrideEntry&) = default;
};

struct StudentStance {
  std::string student_id;
  StanceLabel label;

  friend bool operator==(const StudentStance&, const StudentStance&) = default;
};

struct ClassRecord {
  std::string class_id;
  std::string content_hash;  // of the validated roster, for idempotent ingest
  Status status = Status::Ingested;
  std::vector<StudentResponse> roster;
  std::vector<ArgumentAssessment> assessments;        // current, by student_id
  std::vector<ArgumentAssessment> model_assessments;  // as first produced
  std::vector<ItemError> score_errors;
  std::optional<PositionClustering> clustering;
  std::vector<StudentStance> stances;
  std::optional<ClassGrouping> grouping;
  std::vector<OverrideEntry> override_log;

  friend bool operator==(const ClassRecord&, const ClassRecord&) = default;
};

void to_json(Json& j, const OverrideEntry& v);
void from_json(const Json& j, OverrideEntry& v);
void to_json(Json& j, const ClassRecord& v);
void from_json(const Json& j, ClassRecord& v);

/// Write-to-temp, fsync, rename, fsync directory. `before_rename` runs after
/// the temp file is durable and before it replaces `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content,
                  const std::function<void(const std::filesystem::path&)>& before_rename = {});

struct Reply {
  int status = 200;
  Json body;
};

struct ServiceOptions {
  std::filesystem::path data_dir;
  BackendSelection backends;
  std::string task_context;  // empty: the asset's default task
  std::string default_backend = "fixture";
  int parallelism = 4;
  int max_retries = 1;
  int group_size = 3;
  int restarts = 5;
  /// Test hook passed to atomic_write.
  std::function<void(const std::filesystem::path&)> before_rename;
  /// Backend factory override (tests); defaults to make_backend.
  std::function<std::unique_ptr<Backend>(std::string_view)> backend_factory;
};

/// Every method returns an HTTP-style status and JSON body; domain errors
/// become {"error": kind, "message": ...} with the matching status code.
/// Calls on different classes run concurrently; calls on one class are
/// serialized.
class ClassService {
 public:
  explicit ClassService(ServiceOptions options);
  ~ClassService();
  ClassService(const ClassService&) = delete;
  ClassService& operator=(const ClassService&) = delete;

  Reply ingest(const Json& body);
  Reply list() const;
  Reply get(const std::string& class_id) const;
  Reply score(const std::string& class_id, const std::string& backend);
  Reply cluster(const std::string& class_id, const std::string& backend);
  Reply groups(const std::string& class_id, std::optional<std::uint64_t> seed,
               std::optional<int> group_size = std::nullopt);
  Reply patch_assessment(const std::string& class_id, const std::string& student_id, const Json& body);
  Reply patch_groups(const std::string& class_id, const Json& body);
  Reply finalize(const std::string& class_id);

  std::filesystem::path record_path(const std::string& class_id) const;
  std::filesystem::path export_path(const std::string& class_id) const;

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& class_id) const;
  void persist(const ClassRecord& record) const;

  ServiceOptions options_;
  ScoringPrompt prompt_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> registry_;
};

int http_status(ErrorKind kind) noexcept;

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path static_dir;  // teacher console assets; empty: none
  std::string auth_token;            // empty: no auth
};

/// HTTP front end: the endpoints map one-to-one onto ClassService methods;
/// GET /health is unauthenticated, every /classes route requires the bearer
/// token when one is configured.
class HttpServer {
 public:
  HttpServer(ClassService& service, HttpOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket (port 0 picks a free one) and returns the bound port.
  /// Throws Error(Io) on failure.
  int bind();
  /// Serves until stop(); binds first if needed.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace arguagent::service
