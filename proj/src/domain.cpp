// SPDX-License-Identifier: Apache-2.0

#include "arguagent/domain.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "arguagent/unicode.hpp"

namespace arguagent {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DuplicateStudentId: return "DuplicateStudentId";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::InvalidLevel: return "InvalidLevel";
    case ErrorKind::InvalidSpan: return "InvalidSpan";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::DegenerateRatings: return "DegenerateRatings";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::ZeroTotal: return "ZeroTotal";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::MalformedReply: return "MalformedReply";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::InvalidPartition: return "InvalidPartition";
    case ErrorKind::GroupTooSmall: return "GroupTooSmall";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::UnknownStudent: return "UnknownStudent";
    case ErrorKind::WrongStatus: return "WrongStatus";
    case ErrorKind::InvalidEdit: return "InvalidEdit";
    case ErrorKind::Conflict: return "Conflict";
    case ErrorKind::Io: return "Io";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

RubricLevel::RubricLevel(int value) : value_(value) {
  if (value < kMin || value > kMax) {
    throw Error(ErrorKind::InvalidLevel,
                "rubric level must be in [0, 4], got " + std::to_string(value));
  }
}

std::string_view RubricLevel::label() const noexcept {
  static constexpr std::string_view kLabels[] = {
      "No Response", "Claim Only", "Claim + Evidence", "Argument", "Complete Argument"};
  return kLabels[value_];
}

std::string_view to_string(ComponentKind kind) noexcept {
  switch (kind) {
    case ComponentKind::Claim: return "claim";
    case ComponentKind::Evidence: return "evidence";
    case ComponentKind::Reasoning: return "reasoning";
    case ComponentKind::Rebuttal: return "rebuttal";
  }
  return "claim";
}

std::optional<ComponentKind> component_kind_from(std::string_view name) noexcept {
  if (name == "claim") return ComponentKind::Claim;
  if (name == "evidence") return ComponentKind::Evidence;
  if (name == "reasoning") return ComponentKind::Reasoning;
  if (name == "rebuttal") return ComponentKind::Rebuttal;
  return std::nullopt;
}

void validate_span(const ComponentSpan& span, std::string_view text) {
  const auto length = unicode::scalar_length(text);
  if (span.start >= span.end || span.end > length) {
    throw Error(ErrorKind::InvalidSpan, "span [" + std::to_string(span.start) + ", " +
                                            std::to_string(span.end) +
                                            ") outside text of length " + std::to_string(length));
  }
}

std::string_view to_string(AssessmentSource source) noexcept {
  switch (source) {
    case AssessmentSource::Model: return "model";
    case AssessmentSource::Human: return "human";
    case AssessmentSource::Override: return "override";
  }
  return "model";
}

std::string_view to_string(StanceCategory category) noexcept {
  switch (category) {
    case StanceCategory::All: return "ALL";
    case StanceCategory::SomeNo: return "SOME_NO";
    case StanceCategory::Unsure: return "UNSURE";
  }
  return "UNSURE";
}

std::optional<StanceCategory> stance_category_from(std::string_view name) noexcept {
  if (name == "ALL") return StanceCategory::All;
  if (name == "SOME_NO") return StanceCategory::SomeNo;
  if (name == "UNSURE") return StanceCategory::Unsure;
  return std::nullopt;
}

std::optional<int> PositionClustering::cluster_of(std::string_view student_id) const {
  for (const auto& cluster : clusters) {
    if (std::find(cluster.member_ids.begin(), cluster.member_ids.end(), student_id) !=
        cluster.member_ids.end()) {
      return cluster.cluster_id;
    }
  }
  return std::nullopt;
}

void validate_clustering(const PositionClustering& clustering,
                         std::span<const std::string> student_ids) {
  const auto fail = [](const std::string& why) {
    throw Error(ErrorKind::InvalidPartition, why);
  };
  if (clustering.k() < PositionClustering::kMinClusters ||
      clustering.k() > PositionClustering::kMaxClusters) {
    fail("cluster count " + std::to_string(clustering.k()) + " outside [2, 4]");
  }
  const std::set<std::string> expected(student_ids.begin(), student_ids.end());
  std::set<std::string> seen;
  std::set<int> ids;
  for (const auto& cluster : clustering.clusters) {
    if (!ids.insert(cluster.cluster_id).second) {
      fail("duplicate cluster id " + std::to_string(cluster.cluster_id));
    }
    if (cluster.member_ids.empty()) fail("cluster " + std::to_string(cluster.cluster_id) + " is empty");
    for (const auto& id : cluster.member_ids) {
      if (!expected.contains(id)) fail("unknown student id '" + id + "'");
      if (!seen.insert(id).second) fail("student '" + id + "' assigned to more than one cluster");
    }
  }
  if (seen.size() != expected.size()) {
    for (const auto& id : expected) {
      if (!seen.contains(id)) fail("student '" + id + "' not assigned to any cluster");
    }
  }
}

void ClassGrouping::refresh_summary() {
  summary = GroupingSummary{};
  total_score = 0;
  for (const auto& group : groups) {
    ++summary.groups;
    summary.meets_level_criterion += group.meets_level_criterion() ? 1 : 0;
    summary.meets_position_criterion += group.meets_position_criterion() ? 1 : 0;
    summary.meets_both += group.meets_both() ? 1 : 0;
    total_score += group.group_score();
  }
}

std::vector<StudentResponse> validate_class(std::vector<StudentResponse> roster) {
  if (roster.empty()) throw Error(ErrorKind::EmptyClass, "roster is empty");
  std::unordered_set<std::string> ids;
  for (auto& response : roster) {
    if (response.student_id.empty()) {
      throw Error(ErrorKind::ParseError, "student_id must be non-empty");
    }
    if (!ids.insert(response.student_id).second) {
      throw Error(ErrorKind::DuplicateStudentId,
                  "duplicate student id '" + response.student_id + "'");
    }
    response.text = unicode::trim_trailing(unicode::nfc(response.text));
  }
  return roster;
}

}  // namespace arguagent
