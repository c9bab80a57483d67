// SPDX-License-Identifier: Apache-2.0

#include "arguagent/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <iostream>
#include <set>

#include "arguagent/assets.hpp"
#include "arguagent/grouping.hpp"
#include "arguagent/hashing.hpp"
#include "arguagent/stance.hpp"

namespace arguagent::service {

namespace {

constexpr std::array<std::string_view, 5> kStatusNames{"ingested", "scored", "clustered", "grouped",
                                                       "finalized"};

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

bool valid_class_id(std::string_view id) {
  if (id.empty() || id.size() > 64 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_' || c == '.';
  });
}

Reply error_reply(ErrorKind kind, const std::string& message) {
  return Reply{http_status(kind), Json{{"error", to_string(kind)}, {"message", message}}};
}

template <typename F>
Reply guarded(F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return error_reply(e.kind(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_reply(ErrorKind::ParseError, e.what());
  } catch (const std::exception& e) {
    return Reply{500, Json{{"error", "Internal"}, {"message", e.what()}}};
  }
}

void fsync_directory(const std::filesystem::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

ArgumentAssessment* assessment_of(ClassRecord& r, const std::string& id) {
  for (auto& a : r.assessments) {
    if (a.student_id == id) return &a;
  }
  return nullptr;
}

grouping::GroupingInput grouping_input(const ClassRecord& r) {
  grouping::GroupingInput input;
  input.class_id = r.class_id;
  for (const auto& s : r.roster) {
    const auto* a = assessment_of(const_cast<ClassRecord&>(r), s.student_id);
    const auto cluster = r.clustering ? r.clustering->cluster_of(s.student_id) : std::nullopt;
    if (a == nullptr || !cluster) {
      fail(ErrorKind::WrongStatus, "student '" + s.student_id + "' lacks an assessment or a cluster");
    }
    input.students.push_back(GroupMember{s.student_id, a->level, *cluster});
  }
  return input;
}

Json member_lists(const ClassGrouping& g) {
  Json out = Json::array();
  for (const auto& group : g.groups) out.push_back(group.member_ids());
  return out;
}

void sort_by_id(std::vector<ArgumentAssessment>& v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.student_id < b.student_id; });
}

}  // namespace

std::string_view to_string(Status s) noexcept { return kStatusNames[static_cast<std::size_t>(s)]; }

std::optional<Status> status_from(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
    if (kStatusNames[i] == name) return static_cast<Status>(i);
  }
  return std::nullopt;
}

bool legal_transition(Status from, Status to) noexcept {
  if (from == to) return true;
  switch (from) {
    case Status::Ingested: return to == Status::Scored;
    case Status::Scored: return to == Status::Clustered;
    case Status::Clustered: return to == Status::Grouped;
    case Status::Grouped: return to == Status::Finalized || to == Status::Clustered;
    case Status::Finalized: return false;
  }
  return false;
}

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::UnknownClass:
    case ErrorKind::UnknownStudent:
      return 404;
    case ErrorKind::WrongStatus:
    case ErrorKind::Conflict:
      return 409;
    case ErrorKind::InvalidEdit:
    case ErrorKind::GroupTooSmall:
      return 422;
    case ErrorKind::BackendUnavailable:
    case ErrorKind::MalformedReply:
    case ErrorKind::SchemaViolation:
    case ErrorKind::InvalidPartition:
      return 502;
    case ErrorKind::Io:
      return 500;
    default:
      return 400;
  }
}

// ---------------------------------------------------------------------------
// JSON

void to_json(Json& j, const OverrideEntry& v) {
  j = Json{{"timestamp", v.timestamp}, {"actor", v.actor}, {"student_id", v.student_id},
           {"field", v.field},         {"old", v.old_value}, {"new", v.new_value}};
}

void from_json(const Json& j, OverrideEntry& v) {
  v.timestamp = j.at("timestamp").get<std::string>();
  v.actor = j.at("actor").get<std::string>();
  v.student_id = j.value("student_id", std::string{});
  v.field = j.at("field").get<std::string>();
  v.old_value = j.at("old");
  v.new_value = j.at("new");
}

void to_json(Json& j, const ClassRecord& v) {
  Json stances = Json::array();
  for (const auto& s : v.stances) {
    Json entry = s.label;
    entry["student_id"] = s.student_id;
    stances.push_back(std::move(entry));
  }
  j = Json{{"class_id", v.class_id},
           {"content_hash", v.content_hash},
           {"status", to_string(v.status)},
           {"roster", v.roster},
           {"assessments", v.assessments},
           {"model_assessments", v.model_assessments},
           {"score_errors", v.score_errors},
           {"clustering", v.clustering ? Json(*v.clustering) : Json(nullptr)},
           {"stances", std::move(stances)},
           {"grouping", v.grouping ? Json(*v.grouping) : Json(nullptr)},
           {"override_log", v.override_log}};
}

void from_json(const Json& j, ClassRecord& v) {
  v = ClassRecord{};
  v.class_id = j.at("class_id").get<std::string>();
  v.content_hash = j.at("content_hash").get<std::string>();
  const auto status = status_from(j.at("status").get<std::string>());
  if (!status) fail(ErrorKind::ParseError, "unknown class status");
  v.status = *status;
  v.roster = j.at("roster").get<std::vector<StudentResponse>>();
  v.assessments = j.at("assessments").get<std::vector<ArgumentAssessment>>();
  v.model_assessments = j.at("model_assessments").get<std::vector<ArgumentAssessment>>();
  for (const auto& e : j.at("score_errors")) {
    ItemError item;
    item.student_id = e.at("student_id").get<std::string>();
    item.message = e.at("message").get<std::string>();
    item.kind = ErrorKind::BackendUnavailable;
    const auto name = e.at("error").get<std::string>();
    for (int k = 0; k <= static_cast<int>(ErrorKind::InvalidArgument); ++k) {
      if (to_string(static_cast<ErrorKind>(k)) == name) item.kind = static_cast<ErrorKind>(k);
    }
    v.score_errors.push_back(std::move(item));
  }
  if (!j.at("clustering").is_null()) v.clustering = j.at("clustering").get<PositionClustering>();
  for (const auto& s : j.at("stances")) {
    v.stances.push_back(StudentStance{s.at("student_id").get<std::string>(), s.get<StanceLabel>()});
  }
  if (!j.at("grouping").is_null()) v.grouping = j.at("grouping").get<ClassGrouping>();
  v.override_log = j.at("override_log").get<std::vector<OverrideEntry>>();
}

// ---------------------------------------------------------------------------
// persistence

void atomic_write(const std::filesystem::path& path, const std::string& content,
                  const std::function<void(const std::filesystem::path&)>& before_rename) {
  static std::atomic<unsigned> counter{0};
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." +
                                    std::to_string(counter++);
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) fail(ErrorKind::Io, "cannot create '" + tmp.string() + "': " + std::strerror(errno));
  std::size_t written = 0;
  while (written < content.size()) {
    const auto n = ::write(fd, content.data() + written, content.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      ::close(fd);
      ::unlink(tmp.c_str());
      fail(ErrorKind::Io, "cannot write '" + tmp.string() + "': " + why);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    ::unlink(tmp.c_str());
    fail(ErrorKind::Io, "cannot flush '" + tmp.string() + "'");
  }
  if (before_rename) before_rename(tmp);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    const std::string why = std::strerror(errno);
    ::unlink(tmp.c_str());
    fail(ErrorKind::Io, "cannot replace '" + path.string() + "': " + why);
  }
  fsync_directory(path.parent_path());
}

// ---------------------------------------------------------------------------
// service

struct ClassService::Entry {
  std::mutex mutex;
  ClassRecord record;
};

ClassService::ClassService(ServiceOptions options) : options_(std::move(options)) {
  if (options_.data_dir.empty()) fail(ErrorKind::InvalidArgument, "a data directory is required");
  std::filesystem::create_directories(options_.data_dir / "classes");
  std::filesystem::create_directories(options_.data_dir / "exports");
  if (!options_.backend_factory) {
    const auto selection = options_.backends;
    options_.backend_factory = [selection](std::string_view name) { return make_backend(name, selection); };
  }
  const auto prompt_assets = PromptAssets::load(options_.backends.asset_root);
  prompt_ = build_prompt(options_.task_context.empty() ? prompt_assets.default_task : options_.task_context,
                         true, prompt_assets);

  for (const auto& file : std::filesystem::directory_iterator(options_.data_dir / "classes")) {
    // leftovers of interrupted writes end in .tmp.<pid>.<n> and are skipped
    if (!file.is_regular_file() || file.path().extension() != ".json") continue;
    try {
      auto entry = std::make_shared<Entry>();
      entry->record = decode<ClassRecord>(parse_json(assets::read_file(file.path()), file.path().string()),
                                          file.path().string());
      registry_[entry->record.class_id] = std::move(entry);
    } catch (const std::exception& e) {
      std::cerr << "{\"warning\":\"skipping unreadable class record\",\"file\":"
                << Json(file.path().string()).dump() << ",\"reason\":" << Json(e.what()).dump() << "}\n";
    }
  }
}

ClassService::~ClassService() = default;

std::filesystem::path ClassService::record_path(const std::string& class_id) const {
  return options_.data_dir / "classes" / (class_id + ".json");
}

std::filesystem::path ClassService::export_path(const std::string& class_id) const {
  return options_.data_dir / "exports" / (class_id + ".json");
}

std::shared_ptr<ClassService::Entry> ClassService::find(const std::string& class_id) const {
  std::lock_guard lock(registry_mutex_);
  const auto it = registry_.find(class_id);
  if (it == registry_.end()) fail(ErrorKind::UnknownClass, "no class '" + class_id + "'");
  return it->second;
}

void ClassService::persist(const ClassRecord& record) const {
  atomic_write(record_path(record.class_id), to_text(Json(record)), options_.before_rename);
}

Reply ClassService::ingest(const Json& body) {
  return guarded([&] {
    Json students;
    std::string requested_id;
    if (body.is_array()) {
      students = body;
    } else if (body.is_object()) {
      students = body.contains("students") ? body.at("students") : body.value("roster", Json());
      requested_id = body.value("class_id", std::string{});
    }
    if (!students.is_array()) fail(ErrorKind::ParseError, "roster must be an array of student responses");
    auto roster = validate_class(decode<std::vector<StudentResponse>>(students, "roster"));
    for (auto& s : roster) s.class_id.clear();
    const std::string hash = sha256_hex(Json{{"class_id", requested_id}, {"roster", roster}}.dump());
    const std::string class_id = requested_id.empty() ? "c-" + hash.substr(0, 12) : requested_id;
    if (!valid_class_id(class_id)) {
      fail(ErrorKind::InvalidArgument, "class_id must be 1-64 characters of [A-Za-z0-9._-]");
    }
    for (auto& s : roster) s.class_id = class_id;

    std::lock_guard lock(registry_mutex_);
    if (const auto it = registry_.find(class_id); it != registry_.end()) {
      std::lock_guard class_lock(it->second->mutex);
      if (it->second->record.content_hash != hash) {
        fail(ErrorKind::Conflict, "class '" + class_id + "' already exists with a different roster");
      }
      return Reply{200, Json{{"class_id", class_id},
                             {"status", to_string(it->second->record.status)},
                             {"created", false}}};
    }
    auto entry = std::make_shared<Entry>();
    entry->record.class_id = class_id;
    entry->record.content_hash = hash;
    entry->record.roster = std::move(roster);
    persist(entry->record);
    registry_[class_id] = entry;
    return Reply{201, Json{{"class_id", class_id}, {"status", "ingested"}, {"created", true}}};
  });
}

Reply ClassService::list() const {
  return guarded([&] {
    Json classes = Json::array();
    std::lock_guard lock(registry_mutex_);
    for (const auto& [id, entry] : registry_) {
      std::lock_guard class_lock(entry->mutex);
      classes.push_back({{"class_id", id},
                         {"status", to_string(entry->record.status)},
                         {"students", entry->record.roster.size()}});
    }
    return Reply{200, Json{{"classes", std::move(classes)}}};
  });
}

Reply ClassService::get(const std::string& class_id) const {
  return guarded([&] {
    const auto entry = find(class_id);
    std::lock_guard lock(entry->mutex);
    return Reply{200, Json(entry->record)};
  });
}

Reply ClassService::score(const std::string& class_id, const std::string& backend_name) {
  return guarded([&] {
    const auto entry = find(class_id);
    std::lock_guard lock(entry->mutex);
    ClassRecord r = entry->record;
    if (r.status != Status::Ingested && r.status != Status::Scored) {
      fail(ErrorKind::WrongStatus, "score needs status ingested or scored, class is " +
                                       std::string(to_string(r.status)));
    }
    const auto backend = options_.backend_factory(backend_name.empty() ? options_.default_backend : backend_name);

    std::vector<StudentResponse> pending;
    for (const auto& s : r.roster) {
      if (assessment_of(r, s.student_id) == nullptr) pending.push_back(s);
    }
    auto result = score_class(pending, prompt_, *backend, options_.parallelism, options_.max_retries);
    if (!pending.empty() && result.assessments.empty() &&
        std::all_of(result.errors.begin(), result.errors.end(),
                    [](const ItemError& e) { return e.kind == ErrorKind::BackendUnavailable; })) {
      fail(ErrorKind::BackendUnavailable, result.errors.front().message);
    }
    for (auto& a : result.assessments) {
      r.model_assessments.push_back(a);
      r.assessments.push_back(std::move(a));
    }
    sort_by_id(r.assessments);
    sort_by_id(r.model_assessments);
    r.score_errors = result.errors;
    r.status = Status::Scored;
    persist(r);
    entry->record = std::move(r);
    const auto& rec = entry->record;
    return Reply{200, Json{{"class_id", rec.class_id},
                           {"status", to_string(rec.status)},
                           {"backend", backend->name()},
                           {"prompt_version", prompt_.version},
                           {"assessments", rec.assessments},
                           {"errors", rec.score_errors},
                           {"warnings", result.warnings}}};
  });
}

Reply ClassService::cluster(const std::string& class_id, const std::string& backend_name) {
  return guarded([&] {
    const auto entry = find(class_id);
    std::lock_guard lock(entry->mutex);
    ClassRecord r = entry->record;
    if (r.status != Status::Scored && r.status != Status::Clustered) {
      fail(ErrorKind::WrongStatus, "cluster needs status scored or clustered, class is " +
                                       std::string(to_string(r.status)));
    }
    if (r.assessments.size() != r.roster.size()) {
      fail(ErrorKind::WrongStatus, std::to_string(r.roster.size() - r.assessments.size()) +
                                       " student(s) lack an assessment; re-run score or override");
    }
    std::unique_ptr<Backend> backend;
    if (!backend_name.empty() && backend_name != "offline") backend = options_.backend_factory(backend_name);
    const auto result = cluster_positions(r.roster, r.assessments, backend.get(),
                                          MarkerRuleSet::load(options_.backends.asset_root));
    r.clustering = result.clustering;
    r.stances.clear();
    for (const auto& [id, label] : result.labels) r.stances.push_back(StudentStance{id, label});
    r.grouping.reset();
    r.status = Status::Clustered;
    persist(r);
    entry->record = std::move(r);
    Json body = result;
    body["class_id"] = class_id;
    body["status"] = to_string(Status::Clustered);
    return Reply{200, std::move(body)};
  });
}

Reply ClassService::groups(const std::string& class_id, std::optional<std::uint64_t> seed,
                           std::optional<int> group_size) {
  return guarded([&] {
    const auto entry = find(class_id);
    std::lock_guard lock(entry->mutex);
    ClassRecord r = entry->record;
    if (r.status != Status::Clustered && r.status != Status::Grouped) {
      fail(ErrorKind::WrongStatus, "groups needs status clustered or grouped, class is " +
                                       std::string(to_string(r.status)));
    }
    grouping::OptimizerOptions opt;
    opt.group_size = group_size.value_or(options_.group_size);
    opt.seed = seed.value_or(0);
    opt.restarts = options_.restarts;
    r.grouping = grouping::form_groups(grouping_input(r), opt);
    r.status = Status::Grouped;
    persist(r);
    entry->record = std::move(r);
    return Reply{200, Json{{"class_id", class_id},
                           {"status", to_string(Status::Grouped)},
                           {"grouping", *entry->record.grouping}}};
  });
}

Reply ClassService::patch_assessment(const std::string& class_id, const std::string& student_id,
                                     const Json& body) {
  return guarded([&] {
    const auto entry = find(class_id);
    std::lock_guard lock(entry->mutex);
    ClassRecord r = entry->record;
    if (r.status == Status::Ingested || r.status == Status::Finalized) {
      fail(ErrorKind::WrongStatus, "assessments can be overridden after scoring and before finalizing");
    }
    if (std::none_of(r.roster.begin(), r.roster.end(),
                     [&](const StudentResponse& s) { return s.student_id == student_id; })) {
      fail(ErrorKind::UnknownStudent, "no student '" + student_id + "' in class '" + class_id + "'");
    }
    if (!body.is_object() || (!body.contains("level") && !body.contains("cluster_id"))) {
      fail(ErrorKind::InvalidArgument, "body needs \"level\" and/or \"cluster_id\"");
    }
    const std::string actor = body.value("actor", std::string{"teacher"});
    bool changed = false;

    if (body.contains("level")) {
      if (!body["level"].is_number_integer()) fail(ErrorKind::InvalidLevel, "level must be an integer 0-4");
      const RubricLevel level{body["level"].get<int>()};
      ArgumentAssessment* a = assessment_of(r, student_id);
      if (a == nullptr) {
        ArgumentAssessment created;
        created.student_id = student_id;
        created.level = level;
        created.explanation = "Scored by the teacher.";
        created.source = AssessmentSource::Human;
        r.assessments.push_back(created);
        sort_by_id(r.assessments);
        r.override_log.push_back({utc_now(), actor, student_id, "level", Json(nullptr), level.value()});
        changed = true;
      } else if (a->level != level) {
        r.override_log.push_back({utc_now(), actor, student_id, "level", a->level.value(), level.value()});
        a->replaced_level = a->level;
        a->level = level;
        a->source = AssessmentSource::Override;
        changed = true;
      }
    }

    if (body.contains("cluster_id")) {
      if (!r.clustering) fail(ErrorKind::WrongStatus, "stance overrides need a clustering");
      if (!body["cluster_id"].is_number_integer()) fail(ErrorKind::InvalidArgument, "cluster_id must be an integer");
      const int target = body["cluster_id"].get<int>();
      auto& clusters = r.clustering->clusters;
      const auto dest = std::find_if(clusters.begin(), clusters.end(),
                                     [&](const PositionCluster& c) { return c.cluster_id == target; });
      if (dest == clusters.end()) fail(ErrorKind::InvalidArgument, "no cluster " + std::to_string(target));
      const int current = *r.clustering->cluster_of(student_id);
      if (current != target) {
        for (auto& c : clusters) std::erase(c.member_ids, student_id);
        dest->member_ids.push_back(student_id);
        std::sort(dest->member_ids.begin(), dest->member_ids.end());
        std::erase_if(clusters, [](const PositionCluster& c) { return c.member_ids.empty(); });
        if (r.clustering->k() < PositionClustering::kMinClusters) {
          fail(ErrorKind::InvalidEdit, "moving '" + student_id + "' would leave fewer than 2 position clusters");
        }
        std::vector<std::string> ids;
        for (const auto& s : r.roster) ids.push_back(s.student_id);
        validate_clustering(*r.clustering, ids);
        for (auto& s : r.stances) {
          if (s.student_id != student_id) continue;
          s.label.cluster_id = target;
          for (const auto& c : clusters) {
            if (c.cluster_id == target) s.label.cluster_label = c.label;
          }
        }
        r.override_log.push_back({utc_now(), actor, student_id, "cluster_id", current, target});
        changed = true;
      }
    }

    bool invalidated = false;
    if (changed && r.status == Status::Grouped) {
      r.grouping.reset();
      r.status = Status::Clustered;
      invalidated = true;
    }
    if (changed) persist(r);
    entry->record = std::move(r);
    const auto& rec = entry->record;
    Json reply{{"class_id", class_id},
               {"status", to_string(rec.status)},
               {"changed", changed},
               {"grouping_invalidated", invalidated}};
    if (const auto* a = assessment_of(entry->record, student_id)) reply["assessment"] = *a;
    for (const auto& s : rec.stances) {
      if (s.student_id == student_id) reply["stance"] = s.label;
    }
    if (invalidated) reply["message"] = "grouping out of date; request groups again";
    return Reply{200, std::move(reply)};
  });
}

Reply ClassService::patch_groups(const std::string& class_id, const Json& body) {
  return guarded([&] {
    const auto entry = find(class_id);
    std::lock_guard lock(entry->mutex);
    ClassRecord r = entry->record;
    if (r.status != Status::Grouped) {
      fail(ErrorKind::WrongStatus, "group edits need status grouped, class is " +
                                       std::string(to_string(r.status)));
    }
    if (!body.is_object() || !body.contains("groups") || !body["groups"].is_array()) {
      fail(ErrorKind::ParseError, "body needs a \"groups\" array of member-id lists");
    }
    std::vector<std::vector<std::string>> lists;
    for (const auto& g : body["groups"]) {
      lists.push_back(decode<std::vector<std::string>>(g.is_object() ? g.at("member_ids") : g, "groups"));
    }
    const Json before = member_lists(*r.grouping);
    r.grouping = grouping::regroup_manual(grouping_input(r), lists);
    const Json after = member_lists(*r.grouping);
    if (before != after) {
      r.override_log.push_back({utc_now(), body.value("actor", std::string{"teacher"}), "", "groups", before, after});
    }
    persist(r);
    entry->record = std::move(r);
    return Reply{200, Json{{"class_id", class_id},
                           {"status", to_string(Status::Grouped)},
                           {"grouping", *entry->record.grouping}}};
  });
}

Reply ClassService::finalize(const std::string& class_id) {
  return guarded([&] {
    const auto entry = find(class_id);
    std::lock_guard lock(entry->mutex);
    ClassRecord r = entry->record;
    if (r.status == Status::Grouped) {
      r.status = Status::Finalized;
      persist(r);
      atomic_write(export_path(class_id), to_text(Json(r)));
      entry->record = std::move(r);
    } else if (r.status != Status::Finalized) {
      fail(ErrorKind::WrongStatus, "finalize needs status grouped, class is " + std::string(to_string(r.status)));
    }
    return Reply{200, Json{{"class_id", class_id},
                           {"status", to_string(Status::Finalized)},
                           {"grouping", *entry->record.grouping},
                           {"export", export_path(class_id).string()}}};
  });
}

}  // namespace arguagent::service
