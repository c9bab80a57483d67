// SPDX-License-Identifier: Apache-2.0

#include "arguagent/json_io.hpp"

namespace arguagent {

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorKind::ParseError, why); }

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> get_optional(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->template get<T>();
}

}  // namespace

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, std::string(what) + ": " + e.what());
  }
}

std::string to_text(const Json& j) { return j.dump(2) + "\n"; }

void to_json(Json& j, const StudentResponse& v) {
  j = Json{{"student_id", v.student_id}, {"text", v.text}, {"class_id", v.class_id}};
}

void from_json(const Json& j, StudentResponse& v) {
  v.student_id = j.at("student_id").get<std::string>();
  v.text = j.value("text", std::string{});
  v.class_id = j.value("class_id", std::string{});
}

void to_json(Json& j, const ComponentSpan& v) {
  j = Json{{"kind", to_string(v.kind)}, {"start", v.start}, {"end", v.end}};
}

void from_json(const Json& j, ComponentSpan& v) {
  const auto kind = component_kind_from(j.at("kind").get<std::string>());
  if (!kind) bad("unknown component kind '" + j.at("kind").get<std::string>() + "'");
  v.kind = *kind;
  v.start = j.at("start").get<std::size_t>();
  v.end = j.at("end").get<std::size_t>();
  if (v.start >= v.end) bad("component span must have start < end");
}

void to_json(Json& j, const ArgumentAssessment& v) {
  j = Json{{"student_id", v.student_id},     {"level", v.level},
           {"explanation", v.explanation},   {"claim_summary", v.claim_summary},
           {"highlights", v.highlights},     {"source", to_string(v.source)}};
  if (v.replaced_level) j["replaced_level"] = *v.replaced_level;
}

void from_json(const Json& j, ArgumentAssessment& v) {
  v.student_id = j.at("student_id").get<std::string>();
  v.level = j.at("level").get<RubricLevel>();
  v.explanation = j.value("explanation", std::string{});
  v.claim_summary = j.value("claim_summary", std::string{});
  v.highlights = j.value("highlights", std::vector<ComponentSpan>{});
  const auto source = j.value("source", std::string{"model"});
  if (source == "model") {
    v.source = AssessmentSource::Model;
  } else if (source == "human") {
    v.source = AssessmentSource::Human;
  } else if (source == "override") {
    v.source = AssessmentSource::Override;
  } else {
    bad("unknown assessment source '" + source + "'");
  }
  v.replaced_level = get_optional<RubricLevel>(j, "replaced_level");
  if ((v.source == AssessmentSource::Override) != v.replaced_level.has_value()) {
    bad("replaced_level must be present exactly when source is override");
  }
}

void to_json(Json& j, const StanceLabel& v) {
  j = Json::object();
  if (v.category) j["category"] = to_string(*v.category);
  if (v.cluster_id) j["cluster_id"] = *v.cluster_id;
  if (v.cluster_label) j["cluster_label"] = *v.cluster_label;
}

void from_json(const Json& j, StanceLabel& v) {
  v = StanceLabel{};
  if (const auto name = get_optional<std::string>(j, "category")) {
    v.category = stance_category_from(*name);
    if (!v.category) bad("unknown stance category '" + *name + "'");
  }
  v.cluster_id = get_optional<int>(j, "cluster_id");
  v.cluster_label = get_optional<std::string>(j, "cluster_label");
  if (!v.category && !v.cluster_id) bad("stance label needs a category or a cluster_id");
  if (v.cluster_id.has_value() != v.cluster_label.has_value()) {
    bad("cluster_id and cluster_label must be given together");
  }
}

void to_json(Json& j, const PositionCluster& v) {
  j = Json{{"cluster_id", v.cluster_id}, {"label", v.label}, {"member_ids", v.member_ids}};
}

void from_json(const Json& j, PositionCluster& v) {
  v.cluster_id = j.at("cluster_id").get<int>();
  v.label = j.value("label", std::string{});
  v.member_ids = j.at("member_ids").get<std::vector<std::string>>();
}

void to_json(Json& j, const PositionClustering& v) {
  j = Json{{"clusters", v.clusters}, {"k", v.k()}};
}

void from_json(const Json& j, PositionClustering& v) {
  v.clusters = j.at("clusters").get<std::vector<PositionCluster>>();
  if (j.contains("k") && j.at("k").get<int>() != v.k()) bad("clustering k disagrees with clusters");
}

void to_json(Json& j, const ScoreBreakdown& v) {
  j = Json{{"level_score", v.level_score}, {"position_score", v.position_score}, {"total", v.total}};
}

void from_json(const Json& j, ScoreBreakdown& v) {
  v.level_score = j.at("level_score").get<int>();
  v.position_score = j.at("position_score").get<int>();
  v.total = j.at("total").get<int>();
}

void to_json(Json& j, const GroupMember& v) {
  j = Json{{"student_id", v.student_id}, {"level", v.level}, {"cluster_id", v.cluster_id}};
}

void from_json(const Json& j, GroupMember& v) {
  v.student_id = j.at("student_id").get<std::string>();
  v.level = j.at("level").get<RubricLevel>();
  v.cluster_id = j.at("cluster_id").get<int>();
}

void to_json(Json& j, const Group& v) {
  j = Json{{"member_ids", v.member_ids()},
           {"level_span", {{"min", v.min_level()}, {"max", v.max_level()}}},
           {"level_score", v.level_score()},
           {"position_score", v.position_score()},
           {"group_score", v.group_score()},
           {"meets_level_criterion", v.meets_level_criterion()},
           {"meets_position_criterion", v.meets_position_criterion()}};
}

void from_json(const Json& j, Group& v) {
  const auto& span = j.at("level_span");
  ScoreBreakdown score;
  score.level_score = j.at("level_score").get<int>();
  score.position_score = j.at("position_score").get<int>();
  score.total = j.at("group_score").get<int>();
  v = Group::restore(j.at("member_ids").get<std::vector<std::string>>(),
                     span.at("min").get<int>(), span.at("max").get<int>(), score,
                     j.at("meets_level_criterion").get<bool>(),
                     j.at("meets_position_criterion").get<bool>());
}

void to_json(Json& j, const GroupingSummary& v) {
  j = Json{{"groups", v.groups},
           {"meets_level_criterion", v.meets_level_criterion},
           {"meets_position_criterion", v.meets_position_criterion},
           {"meets_both", v.meets_both}};
}

void from_json(const Json& j, GroupingSummary& v) {
  v.groups = j.at("groups").get<int>();
  v.meets_level_criterion = j.at("meets_level_criterion").get<int>();
  v.meets_position_criterion = j.at("meets_position_criterion").get<int>();
  v.meets_both = j.at("meets_both").get<int>();
}

void to_json(Json& j, const ClassGrouping& v) {
  j = Json{{"class_id", v.class_id},     {"policy", v.policy},   {"groups", v.groups},
           {"unassigned", v.unassigned}, {"summary", v.summary}, {"total_score", v.total_score}};
  put_optional(j, "seed", v.seed);
}

void from_json(const Json& j, ClassGrouping& v) {
  v.class_id = j.value("class_id", std::string{});
  v.policy = j.value("policy", std::string{});
  v.seed = get_optional<std::uint64_t>(j, "seed");
  v.groups = j.at("groups").get<std::vector<Group>>();
  v.unassigned = j.value("unassigned", std::vector<std::string>{});
  v.refresh_summary();
  if (j.contains("summary") && !(j.at("summary").get<GroupingSummary>() == v.summary)) {
    bad("grouping summary disagrees with its groups");
  }
  if (j.contains("total_score") && j.at("total_score").get<int>() != v.total_score) {
    bad("grouping total_score disagrees with its groups");
  }
}

namespace grouping {

void to_json(Json& j, const GroupingInput& v) {
  j = Json{{"class_id", v.class_id}, {"students", v.students}};
}

void from_json(const Json& j, GroupingInput& v) {
  v.class_id = j.value("class_id", std::string{});
  v.students = j.at("students").get<std::vector<GroupMember>>();
}

}  // namespace grouping

namespace metrics {

void to_json(Json& j, const RatingMatrix& v) {
  Json rows = Json::array();
  for (const auto& row : v.ratings) {
    Json r = Json::array();
    for (const auto& cell : row) r.push_back(cell ? Json(*cell) : Json(nullptr));
    rows.push_back(std::move(r));
  }
  j = Json{{"coders", v.coders}, {"items", v.items}, {"ratings", std::move(rows)}};
}

void from_json(const Json& j, RatingMatrix& v) {
  v.coders = j.at("coders").get<std::vector<std::string>>();
  v.items = j.at("items").get<std::vector<std::string>>();
  v.ratings.clear();
  for (const auto& row : j.at("ratings")) {
    std::vector<std::optional<int>> cells;
    for (const auto& cell : row) {
      cells.push_back(cell.is_null() ? std::nullopt : std::optional<int>(cell.get<int>()));
    }
    v.ratings.push_back(std::move(cells));
  }
  v.validate();
}

void to_json(Json& j, const AgreementReport& v) {
  j = Json{{"exact_match", v.exact_match}, {"within_one", v.within_one}, {"mae", v.mae},
           {"bias", v.bias},               {"n", v.n},                   {"flags", v.flags}};
  put_optional(j, "qwk", v.qwk);
  put_optional(j, "pearson", v.pearson);
}

void from_json(const Json& j, AgreementReport& v) {
  v.exact_match = j.at("exact_match").get<double>();
  v.within_one = j.at("within_one").get<double>();
  v.mae = j.at("mae").get<double>();
  v.bias = j.at("bias").get<double>();
  v.n = j.at("n").get<int>();
  v.flags = j.value("flags", std::vector<std::string>{});
  v.qwk = get_optional<double>(j, "qwk");
  v.pearson = get_optional<double>(j, "pearson");
}

void to_json(Json& j, const PairwiseAgreement& v) {
  j = Json{{"exact", v.exact}, {"within_one", v.within_one}, {"pairable_items", v.pairable_items}};
}

void to_json(Json& j, const LevelRecall& v) {
  j = Json{{"level", v.level},
           {"human_count", v.human_count},
           {"predicted_count", v.predicted_count},
           {"true_positives", v.true_positives},
           {"misses", v.misses},
           {"false_positives", v.false_positives}};
  put_optional(j, "recall", v.recall);
}

void to_json(Json& j, const LevelRecallReport& v) {
  const auto bucket = [](const DisagreementBucket& b) {
    return Json{{"count", b.count}, {"fraction", b.fraction}};
  };
  j = Json{{"levels", v.levels},
           {"n", v.n},
           {"exact", bucket(v.exact)},
           {"off_by_one", bucket(v.off_by_one)},
           {"off_by_two_plus", bucket(v.off_by_two_plus)}};
}

void to_json(Json& j, const ImprovementDecomposition& v) {
  j = Json{{"prompt_delta", v.prompt_delta},
           {"model_delta", v.model_delta},
           {"total_delta", v.total_delta},
           {"prompt_share", v.prompt_share},
           {"model_share", v.model_share},
           {"prompt_share_percent", v.prompt_share_percent},
           {"model_share_percent", v.model_share_percent}};
}

}  // namespace metrics

}  // namespace arguagent
