// SPDX-License-Identifier: Apache-2.0
//
// Shared vocabulary types. Every type here has a canonical snake_case JSON
// encoding (see json_io.hpp) that doubles as file, wire and persistence format.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arguagent/error.hpp"

namespace arguagent {

/// Rubric level on the 0-4 argumentation learning progression.
class RubricLevel {
 public:
  static constexpr int kMin = 0;
  static constexpr int kMax = 4;
  static constexpr int kCount = 5;

  /// Throws Error(InvalidLevel) for values outside [0, 4].
  explicit RubricLevel(int value);

  int value() const noexcept { return value_; }
  std::string_view label() const noexcept;

  friend constexpr bool operator==(RubricLevel, RubricLevel) = default;
  friend constexpr auto operator<=>(RubricLevel, RubricLevel) = default;

 private:
  int value_;
};

struct StudentResponse {
  std::string student_id;
  std::string text;
  std::string class_id;

  friend bool operator==(const StudentResponse&, const StudentResponse&) = default;
};

enum class ComponentKind { Claim, Evidence, Reasoning, Rebuttal };

std::string_view to_string(ComponentKind kind) noexcept;
std::optional<ComponentKind> component_kind_from(std::string_view name) noexcept;

/// Highlight over a response, in Unicode scalar offsets, end exclusive.
struct ComponentSpan {
  ComponentKind kind = ComponentKind::Claim;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const ComponentSpan&, const ComponentSpan&) = default;
};

/// Throws Error(InvalidSpan) unless 0 <= start < end <= scalar length of text.
void validate_span(const ComponentSpan& span, std::string_view text);

enum class AssessmentSource { Model, Human, Override };

std::string_view to_string(AssessmentSource source) noexcept;

struct ArgumentAssessment {
  std::string student_id;
  RubricLevel level{0};
  std::string explanation;
  std::string claim_summary;
  std::vector<ComponentSpan> highlights;
  AssessmentSource source = AssessmentSource::Model;
  /// Level this assessment replaced; set iff source == Override.
  std::optional<RubricLevel> replaced_level;

  friend bool operator==(const ArgumentAssessment&, const ArgumentAssessment&) = default;
};

enum class StanceCategory { All, SomeNo, Unsure };

std::string_view to_string(StanceCategory category) noexcept;
std::optional<StanceCategory> stance_category_from(std::string_view name) noexcept;

struct StanceLabel {
  std::optional<StanceCategory> category;
  std::optional<int> cluster_id;
  std::optional<std::string> cluster_label;

  friend bool operator==(const StanceLabel&, const StanceLabel&) = default;
};

struct PositionCluster {
  int cluster_id = 0;
  std::string label;
  std::vector<std::string> member_ids;

  friend bool operator==(const PositionCluster&, const PositionCluster&) = default;
};

struct PositionClustering {
  static constexpr int kMinClusters = 2;
  static constexpr int kMaxClusters = 4;

  std::vector<PositionCluster> clusters;

  int k() const noexcept { return static_cast<int>(clusters.size()); }

  /// Cluster id of a student, if present.
  std::optional<int> cluster_of(std::string_view student_id) const;

  friend bool operator==(const PositionClustering&, const PositionClustering&) = default;
};

/// Throws Error(InvalidPartition) unless the clustering has 2-4 non-empty
/// clusters with distinct ids that exactly partition `student_ids`.
void validate_clustering(const PositionClustering& clustering,
                         std::span<const std::string> student_ids);

/// Additive group objective: level_score + position_score.
struct ScoreBreakdown {
  static constexpr int kSpanViolation = -100;
  static constexpr int kSpanOne = 30;
  static constexpr int kSpanZero = 10;
  static constexpr int kMixedPositions = 40;
  static constexpr int kUniformPosition = -20;

  int level_score = 0;
  int position_score = 0;
  int total = 0;

  friend bool operator==(const ScoreBreakdown&, const ScoreBreakdown&) = default;
};

/// One member of a group as seen by the scorer.
struct GroupMember {
  std::string student_id;
  RubricLevel level{0};
  int cluster_id = 0;

  friend bool operator==(const GroupMember&, const GroupMember&) = default;
};

class Group {
 public:
  Group() = default;

  /// Builds a group and derives every score and flag from the members.
  /// Throws Error(GroupTooSmall) for fewer than two members.
  static Group of(std::span<const GroupMember> members);

  /// Rebuilds a group from its encoded fields, checking that scores and flags
  /// agree with each other. Throws Error(ParseError) on any inconsistency.
  static Group restore(std::vector<std::string> member_ids, int min_level, int max_level,
                       const ScoreBreakdown& score, bool meets_level, bool meets_position);

  const std::vector<std::string>& member_ids() const noexcept { return member_ids_; }
  int min_level() const noexcept { return min_level_; }
  int max_level() const noexcept { return max_level_; }
  int level_span() const noexcept { return max_level_ - min_level_; }
  const ScoreBreakdown& score() const noexcept { return score_; }
  int level_score() const noexcept { return score_.level_score; }
  int position_score() const noexcept { return score_.position_score; }
  int group_score() const noexcept { return score_.total; }
  bool meets_level_criterion() const noexcept { return level_span() <= 1; }
  bool meets_position_criterion() const noexcept { return mixed_positions_; }
  bool meets_both() const noexcept { return meets_level_criterion() && meets_position_criterion(); }

  friend bool operator==(const Group&, const Group&) = default;

 private:
  std::vector<std::string> member_ids_;
  int min_level_ = 0;
  int max_level_ = 0;
  bool mixed_positions_ = false;
  ScoreBreakdown score_;
};

struct GroupingSummary {
  int groups = 0;
  int meets_level_criterion = 0;
  int meets_position_criterion = 0;
  int meets_both = 0;

  friend bool operator==(const GroupingSummary&, const GroupingSummary&) = default;
};

struct ClassGrouping {
  std::string class_id;
  std::string policy;  // "optimizer", "random" or "manual"
  std::optional<std::uint64_t> seed;
  std::vector<Group> groups;
  std::vector<std::string> unassigned;
  GroupingSummary summary;
  int total_score = 0;

  /// Recomputes summary and total_score from groups.
  void refresh_summary();

  friend bool operator==(const ClassGrouping&, const ClassGrouping&) = default;
};

/// Checks id uniqueness and non-emptiness, NFC-normalizes text and trims
/// trailing whitespace. Empty text is valid (a blank response).
std::vector<StudentResponse> validate_class(std::vector<StudentResponse> roster);

}  // namespace arguagent
