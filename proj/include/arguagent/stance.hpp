// SPDX-License-Identifier: Apache-2.0
//
// Position clustering (stage one of grouping) and the rule-based three-way
// stance classifier used to validate it.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arguagent/backend.hpp"
#include "arguagent/domain.hpp"
#include "arguagent/markers.hpp"

namespace arguagent {

struct MarkerRule {
  std::string pattern_class;
  StanceCategory category = StanceCategory::Unsure;
  std::vector<markers::Pattern> patterns;
};

/// Ordered rules; the first rule with any matching pattern decides.
struct MarkerRuleSet {
  std::vector<MarkerRule> rules;
  StanceCategory default_category = StanceCategory::Unsure;

  /// stance_rules.json from the asset root (see assets::load).
  static MarkerRuleSet load(const std::filesystem::path& root = {});
  static MarkerRuleSet from_json(const Json& j);
};

struct StanceDecision {
  StanceCategory category = StanceCategory::Unsure;
  std::optional<std::size_t> rule;  // absent when the default applied
  std::string pattern;
};

StanceDecision explain_stance(std::string_view claim_text, const MarkerRuleSet& rules);

/// Label with only `category` set.
StanceLabel classify_stance(std::string_view claim_text, const MarkerRuleSet& rules);

struct ClusterOptions {
  int min_k = PositionClustering::kMinClusters;
  int max_k = PositionClustering::kMaxClusters;
  int max_retries = 1;
  std::string instruction;  // empty: the cluster.txt prompt asset
};

struct ClusterResult {
  PositionClustering clustering;
  /// Per student (roster order): cluster id and label, plus the marker
  /// category of the student's claim.
  std::vector<std::pair<std::string, StanceLabel>> labels;
  std::vector<std::string> warnings;
  std::string method;  // "model" or "offline"
};

/// With a backend: one request carrying every claim summary; an invalid
/// partition gets `max_retries` repair retries, then Error(InvalidPartition).
/// Without one (nullptr): marker categories become the clusters; a single
/// category is split by level parity (then by id order) with a warning.
ClusterResult cluster_positions(const std::vector<StudentResponse>& roster,
                                const std::vector<ArgumentAssessment>& assessments, Backend* backend,
                                const MarkerRuleSet& rules = MarkerRuleSet::load(),
                                const ClusterOptions& options = {});

/// Parses {"clusters": [{"label", "members": [...]}, ...]}; cluster ids are
/// assigned in reply order. Throws Error(InvalidPartition) on any violation.
PositionClustering parse_cluster_reply(std::string_view reply, std::span<const std::string> student_ids,
                                       int min_k = PositionClustering::kMinClusters,
                                       int max_k = PositionClustering::kMaxClusters);

struct CategoryAccuracy {
  int human_count = 0;
  int correct = 0;
  std::optional<double> accuracy;  // absent when human_count == 0
};

struct StanceAgreement {
  std::array<CategoryAccuracy, 3> per_category;  // indexed ALL, SOME_NO, UNSURE
  double overall_accuracy = 0;                   // item-weighted
  std::optional<double> kappa;                   // absent when undefined
  std::vector<std::string> flags;
  std::array<std::array<int, 3>, 3> confusion{};  // [human][ai]
  int n = 0;
};

/// Throws Error(LengthMismatch) for unequal or empty inputs.
StanceAgreement stance_agreement(std::span<const StanceCategory> human, std::span<const StanceCategory> ai);

void to_json(Json& j, const StanceAgreement& v);
void to_json(Json& j, const ClusterResult& v);

}  // namespace arguagent
