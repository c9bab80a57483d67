// SPDX-License-Identifier: Apache-2.0
//
// Rubric scoring: prompt assembly, reply parsing with repair retries, batch
// scoring, and the offline fixture/heuristic backends.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arguagent/backend.hpp"
#include "arguagent/domain.hpp"
#include "arguagent/error.hpp"
#include "arguagent/markers.hpp"

namespace arguagent {

/// The text pieces a prompt is assembled from, one asset file each.
struct PromptAssets {
  std::string version;
  std::string preamble;
  std::vector<std::string> rubric;      // five level definitions, level order
  std::vector<std::string> principles;  // five scoring principles
  std::string evidence_criteria;
  std::vector<std::string> decision_tree;
  std::string output_schema;
  std::string repair_instruction;
  std::string cluster_instruction;
  std::string default_task;

  /// Loads prompts/<version>/ from the asset root (see assets::load).
  /// Throws Error(InvalidArgument) when the counts above are wrong or the
  /// first decision node does not ask for a claim.
  static PromptAssets load(const std::filesystem::path& root = {}, std::string_view version = "v1");
};

struct ScoringPrompt {
  std::string version;
  bool calibrated = true;
  std::string preamble;
  std::vector<std::string> rubric_text;
  std::vector<std::string> principles;  // empty when not calibrated
  std::string evidence_criteria;        // empty when not calibrated
  std::vector<std::string> decision_tree;  // empty when not calibrated
  std::string task_context;
  std::string output_schema;
  std::string repair_instruction;
  std::vector<std::string> warnings;

  std::string system_text() const;
  std::string user_text(std::string_view response_text) const;
  /// SHA-256 of system_text().
  std::string hash() const;
};

/// Calibrated prompts carry principles, evidence criteria and the decision
/// tree; uncalibrated ones carry the rubric only. An empty task context is
/// allowed and recorded as a warning.
ScoringPrompt build_prompt(std::string_view task_context, bool calibrated,
                           const PromptAssets& assets = PromptAssets::load());

/// Parses one model reply. Throws Error(MalformedReply) for anything that is
/// not the requested object (including a missing claim at level >= 1) and
/// Error(SchemaViolation) for a level outside 0-4. Quotes that do not occur
/// in the response are dropped and reported through `warnings`.
ArgumentAssessment parse_score_reply(std::string_view reply, const StudentResponse& response,
                                     std::vector<std::string>* warnings = nullptr);

/// Scores one response. A malformed reply is sent back with the repair
/// instruction up to `max_retries` times before Error(MalformedReply).
ArgumentAssessment score_response(const StudentResponse& response, const ScoringPrompt& prompt,
                                  Backend& backend, int max_retries = 1,
                                  std::vector<std::string>* warnings = nullptr);

struct ItemError {
  std::string student_id;
  ErrorKind kind;
  std::string message;

  friend bool operator==(const ItemError&, const ItemError&) = default;
};

struct ClassScores {
  std::vector<ArgumentAssessment> assessments;  // ordered by student_id
  std::vector<ItemError> errors;                // ordered by student_id
  std::vector<std::string> warnings;
};

/// Scores a validated roster with up to `parallelism` concurrent backend
/// calls. Per-student failures are collected, never thrown.
ClassScores score_class(const std::vector<StudentResponse>& roster, const ScoringPrompt& prompt,
                        Backend& backend, int parallelism = 4, int max_retries = 1);

/// Marker lists for the offline heuristic (heuristic_markers.json).
struct HeuristicMarkers {
  std::vector<markers::Pattern> claim;
  std::vector<markers::Pattern> evidence;
  std::vector<markers::Pattern> mechanism;
  std::vector<markers::Pattern> counter;

  static HeuristicMarkers load(const std::filesystem::path& root = {});
  static HeuristicMarkers from_json(const Json& j);
};

struct HeuristicAnalysis {
  RubricLevel level;
  /// Byte range of the sentence holding the first marker of each kind.
  std::optional<markers::ByteRange> claim;
  std::optional<markers::ByteRange> evidence;
  std::optional<markers::ByteRange> mechanism;
  std::optional<markers::ByteRange> counter;
  std::vector<std::string> matched;  // "kind:pattern" for each kind found
};

/// Decision-tree cascade: no claim marker -> 0; no evidence marker -> 1; no
/// mechanism marker -> 2; no counterposition marker -> 3; else 4.
HeuristicAnalysis analyze_argument(std::string_view text, const HeuristicMarkers& markers);

std::unique_ptr<Backend> heuristic_backend(HeuristicMarkers markers = HeuristicMarkers::load());

/// Exact-text lookup (after the roster normalization) with fallthrough to
/// the heuristic backend.
std::unique_ptr<Backend> fixture_backend(std::map<std::string, ArgumentAssessment> table,
                                         HeuristicMarkers markers = HeuristicMarkers::load());

/// Reads a fixture table: a JSON array of {"text", "level", "explanation",
/// "claim_summary", "highlights"} entries.
std::map<std::string, ArgumentAssessment> fixture_table_from_json(const Json& j);

/// The five example responses with their reference levels
/// (fixtures/rubric_examples.json).
std::map<std::string, ArgumentAssessment> rubric_examples_fixture(const std::filesystem::path& root = {});

/// Renders an assessment in the reply format the prompt asks for (quotes
/// instead of offsets); used by the offline backends.
std::string reply_for(const ArgumentAssessment& assessment, std::string_view response_text);

struct BackendSelection {
  std::filesystem::path asset_root;    // empty: embedded assets / ARGUAGENT_ASSET_DIR
  std::filesystem::path fixture_file;  // empty: the rubric example fixture
  std::filesystem::path cache_dir;     // empty: no reply cache (live only)
  BackendConfig live = BackendConfig::from_environment();
};

/// "heuristic", "fixture" or "live"; anything else is Error(InvalidArgument).
std::unique_ptr<Backend> make_backend(std::string_view name, const BackendSelection& selection = {});

void to_json(Json& j, const ItemError& v);
void to_json(Json& j, const ClassScores& v);

}  // namespace arguagent
