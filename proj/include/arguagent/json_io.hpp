// SPDX-License-Identifier: Apache-2.0
//
// Canonical JSON encodings. Field names are snake_case and match the member
// names of the domain types. Decoders validate type invariants and throw
// Error(ParseError) (or the more specific domain error) on bad input; unknown
// keys are ignored so that richer documents can be read as simpler ones.

#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "arguagent/domain.hpp"
#include "arguagent/grouping.hpp"
#include "arguagent/metrics.hpp"

namespace arguagent {

using Json = nlohmann::json;

/// Parses JSON text; syntax errors become Error(ParseError) with the
/// parser's diagnostic (byte position included).
Json parse_json(std::string_view text, std::string_view what = "input");

/// Runs a decoder and converts nlohmann type/key errors into ParseError.
template <typename T>
T decode(const Json& j, std::string_view what = "input") {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string(what) + ": " + e.what());
  }
}

/// Two-space indented dump with a trailing newline.
std::string to_text(const Json& j);

void to_json(Json& j, const StudentResponse& v);
void from_json(const Json& j, StudentResponse& v);
void to_json(Json& j, const ComponentSpan& v);
void from_json(const Json& j, ComponentSpan& v);
void to_json(Json& j, const ArgumentAssessment& v);
void from_json(const Json& j, ArgumentAssessment& v);
void to_json(Json& j, const StanceLabel& v);
void from_json(const Json& j, StanceLabel& v);
void to_json(Json& j, const PositionCluster& v);
void from_json(const Json& j, PositionCluster& v);
void to_json(Json& j, const PositionClustering& v);
void from_json(const Json& j, PositionClustering& v);
void to_json(Json& j, const ScoreBreakdown& v);
void from_json(const Json& j, ScoreBreakdown& v);
void to_json(Json& j, const GroupMember& v);
void from_json(const Json& j, GroupMember& v);
void to_json(Json& j, const Group& v);
void from_json(const Json& j, Group& v);
void to_json(Json& j, const GroupingSummary& v);
void from_json(const Json& j, GroupingSummary& v);
void to_json(Json& j, const ClassGrouping& v);
void from_json(const Json& j, ClassGrouping& v);

namespace grouping {
void to_json(Json& j, const GroupingInput& v);
void from_json(const Json& j, GroupingInput& v);
}  // namespace grouping

namespace metrics {
void to_json(Json& j, const RatingMatrix& v);
void from_json(const Json& j, RatingMatrix& v);
void to_json(Json& j, const AgreementReport& v);
void from_json(const Json& j, AgreementReport& v);
void to_json(Json& j, const PairwiseAgreement& v);
void to_json(Json& j, const LevelRecall& v);
void to_json(Json& j, const LevelRecallReport& v);
void to_json(Json& j, const ImprovementDecomposition& v);
}  // namespace metrics

}  // namespace arguagent

namespace nlohmann {

template <>
struct adl_serializer<arguagent::RubricLevel> {
  static void to_json(json& j, arguagent::RubricLevel level) { j = level.value(); }
  static arguagent::RubricLevel from_json(const json& j) {
    return arguagent::RubricLevel{j.get<int>()};
  }
};

}  // namespace nlohmann
