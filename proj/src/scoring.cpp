// SPDX-License-Identifier: Apache-2.0

#include "arguagent/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <sstream>
#include <thread>

#include "arguagent/assets.hpp"
#include "arguagent/hashing.hpp"
#include "arguagent/unicode.hpp"

namespace arguagent {

namespace {

std::string trimmed(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> entry_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    line = trimmed(line);
    if (!line.empty() && line.front() != '#') lines.push_back(std::move(line));
  }
  return lines;
}

[[noreturn]] void malformed(const std::string& why) { throw Error(ErrorKind::MalformedReply, why); }

}  // namespace

PromptAssets PromptAssets::load(const std::filesystem::path& root, std::string_view version) {
  const std::string dir = "prompts/" + std::string(version) + "/";
  const auto read = [&](const char* file) { return assets::load(dir + file, root); };

  PromptAssets a;
  a.version = std::string(version);
  a.preamble = trimmed(read("preamble.txt"));
  a.rubric = entry_lines(read("rubric.txt"));
  a.principles = entry_lines(read("principles.txt"));
  a.evidence_criteria = trimmed(read("evidence_criteria.txt"));
  a.decision_tree = entry_lines(read("decision_tree.txt"));
  a.output_schema = trimmed(read("output_schema.txt"));
  a.repair_instruction = trimmed(read("repair.txt"));
  a.cluster_instruction = trimmed(read("cluster.txt"));
  a.default_task = trimmed(read("task_deformation.txt"));

  if (a.rubric.size() != RubricLevel::kCount) {
    throw Error(ErrorKind::InvalidArgument, "rubric.txt must define exactly 5 levels");
  }
  if (a.principles.size() != 5) {
    throw Error(ErrorKind::InvalidArgument, "principles.txt must list exactly 5 principles");
  }
  if (a.decision_tree.empty() ||
      unicode::ascii_lower(a.decision_tree.front()).find("claim") == std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "the first decision-tree node must ask for a claim");
  }
  return a;
}

std::string ScoringPrompt::system_text() const {
  std::ostringstream out;
  out << preamble << "\n\n";
  if (!task_context.empty()) out << "Task shown to students:\n" << task_context << "\n\n";
  out << "Rubric levels:\n";
  for (const auto& line : rubric_text) out << line << "\n";
  if (calibrated) {
    out << "\n" << evidence_criteria << "\n\nScoring principles:\n";
    for (std::size_t i = 0; i < principles.size(); ++i) out << i + 1 << ". " << principles[i] << "\n";
    out << "\nDecision tree (apply in order):\n";
    for (std::size_t i = 0; i < decision_tree.size(); ++i) {
      out << i + 1 << ". " << decision_tree[i] << "\n";
    }
  }
  out << "\n" << output_schema << "\n";
  return out.str();
}

std::string ScoringPrompt::user_text(std::string_view response_text) const {
  return "Student response:\n\"\"\"\n" + std::string(response_text) + "\n\"\"\"";
}

std::string ScoringPrompt::hash() const { return sha256_hex(system_text()); }

ScoringPrompt build_prompt(std::string_view task_context, bool calibrated, const PromptAssets& assets) {
  ScoringPrompt p;
  p.version = assets.version;
  p.calibrated = calibrated;
  p.preamble = assets.preamble;
  p.rubric_text = assets.rubric;
  if (calibrated) {
    p.principles = assets.principles;
    p.evidence_criteria = assets.evidence_criteria;
    p.decision_tree = assets.decision_tree;
  }
  p.task_context = trimmed(task_context);
  p.output_schema = assets.output_schema;
  p.repair_instruction = assets.repair_instruction;
  if (p.task_context.empty()) p.warnings.emplace_back("empty task context");
  return p;
}

ArgumentAssessment parse_score_reply(std::string_view reply, const StudentResponse& response,
                                     std::vector<std::string>* warnings) {
  // tolerate code fences or chatter around the object
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    malformed("reply contains no JSON object");
  }
  Json j;
  try {
    j = Json::parse(reply.substr(open, close - open + 1));
  } catch (const nlohmann::json::parse_error& e) {
    malformed(std::string("reply is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) malformed("reply is not a JSON object");

  const auto level_it = j.find("level");
  if (level_it == j.end() || !level_it->is_number()) malformed("\"level\" must be an integer");
  const double raw = level_it->get<double>();
  if (raw != static_cast<double>(static_cast<long long>(raw))) malformed("\"level\" must be an integer");
  if (raw < RubricLevel::kMin || raw > RubricLevel::kMax) {
    throw Error(ErrorKind::SchemaViolation,
                "level " + level_it->dump() + " is outside the rubric range 0-4");
  }

  ArgumentAssessment a;
  a.student_id = response.student_id;
  a.level = RubricLevel{static_cast<int>(raw)};
  a.source = AssessmentSource::Model;

  const auto text_field = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) malformed(std::string("\"") + key + "\" must be a string");
    return trimmed(it->get<std::string>());
  };
  a.explanation = text_field("explanation");
  a.claim_summary = text_field("claim");
  if (a.level.value() >= 1 && a.claim_summary.empty()) {
    malformed("\"claim\" must be non-empty for level >= 1");
  }

  const auto warn = [&](std::string message) {
    if (warnings != nullptr) warnings->push_back(std::move(message));
  };
  if (const auto it = j.find("highlights"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) malformed("\"highlights\" must be an array");
    for (const auto& h : *it) {
      if (!h.is_object() || !h.contains("kind") || !h.contains("quote") || !h["kind"].is_string() ||
          !h["quote"].is_string()) {
        warn("dropped highlight without string kind and quote");
        continue;
      }
      const auto kind = component_kind_from(h["kind"].get<std::string>());
      if (!kind) {
        warn("dropped highlight of unknown kind '" + h["kind"].get<std::string>() + "'");
        continue;
      }
      const std::string quote = trimmed(h["quote"].get<std::string>());
      if (quote.empty() || !unicode::valid_utf8(quote)) {
        warn("dropped empty or invalid highlight quote");
        continue;
      }
      const std::string needle = unicode::nfc(quote);
      auto range = unicode::find_scalar(response.text, needle);
      if (!range) {
        range = unicode::find_scalar(unicode::ascii_lower(response.text), unicode::ascii_lower(needle));
      }
      if (!range) {
        warn("dropped highlight quote not found in response: \"" + quote + "\"");
        continue;
      }
      a.highlights.push_back(ComponentSpan{*kind, range->start, range->end});
    }
  }

  if (a.level.value() >= 2) {
    const bool evidence_span = std::any_of(a.highlights.begin(), a.highlights.end(), [](const auto& h) {
      return h.kind == ComponentKind::Evidence;
    });
    if (!evidence_span && unicode::ascii_lower(a.explanation).find("evidence") == std::string::npos) {
      malformed("level >= 2 needs an evidence highlight or an explanation of the evidence");
    }
  }
  return a;
}

ArgumentAssessment score_response(const StudentResponse& response, const ScoringPrompt& prompt,
                                  Backend& backend, int max_retries,
                                  std::vector<std::string>* warnings) {
  std::vector<ChatMessage> messages{{"system", prompt.system_text()},
                                    {"user", prompt.user_text(response.text)}};
  for (int attempt = 0;; ++attempt) {
    const std::string reply =
        backend.score_reply(ScoreRequest{prompt, response.text, messages, attempt});
    try {
      return parse_score_reply(reply, response, warnings);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MalformedReply) throw;
      if (attempt >= max_retries) {
        throw Error(ErrorKind::MalformedReply, "malformed reply after " + std::to_string(attempt + 1) +
                                                   " attempt(s): " + e.what());
      }
      messages.push_back({"assistant", reply});
      messages.push_back({"user", prompt.repair_instruction + " " + e.what()});
    }
  }
}

ClassScores score_class(const std::vector<StudentResponse>& roster, const ScoringPrompt& prompt,
                        Backend& backend, int parallelism, int max_retries) {
  std::vector<std::size_t> order(roster.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return roster[a].student_id < roster[b].student_id;
  });

  struct Slot {
    std::optional<ArgumentAssessment> assessment;
    std::optional<ItemError> error;
    std::vector<std::string> warnings;
  };
  std::vector<Slot> slots(order.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < order.size(); i = next++) {
      const auto& response = roster[order[i]];
      Slot& slot = slots[i];
      try {
        slot.assessment = score_response(response, prompt, backend, max_retries, &slot.warnings);
      } catch (const Error& e) {
        slot.error = ItemError{response.student_id, e.kind(), e.what()};
      } catch (const std::exception& e) {
        slot.error = ItemError{response.student_id, ErrorKind::BackendUnavailable, e.what()};
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, parallelism));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < std::min(workers, order.size()); ++w) pool.emplace_back(worker);
    worker();
  }

  ClassScores out;
  out.warnings = prompt.warnings;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].assessment) out.assessments.push_back(std::move(*slots[i].assessment));
    if (slots[i].error) out.errors.push_back(std::move(*slots[i].error));
    for (auto& w : slots[i].warnings) out.warnings.push_back(roster[order[i]].student_id + ": " + w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// offline backends

HeuristicMarkers HeuristicMarkers::from_json(const Json& j) {
  const auto list = [&](const char* key) {
    if (!j.contains(key)) {
      throw Error(ErrorKind::ParseError, std::string("heuristic markers need a \"") + key + "\" list");
    }
    return markers::compile(decode<std::vector<std::string>>(j.at(key), key));
  };
  HeuristicMarkers m;
  m.claim = list("claim");
  m.evidence = list("evidence");
  m.mechanism = list("mechanism");
  m.counter = list("counter");
  return m;
}

HeuristicMarkers HeuristicMarkers::load(const std::filesystem::path& root) {
  return from_json(parse_json(assets::load("heuristic_markers.json", root), "heuristic_markers.json"));
}

HeuristicAnalysis analyze_argument(std::string_view text, const HeuristicMarkers& m) {
  const auto tokens = markers::tokenize(text);
  HeuristicAnalysis a{RubricLevel{0}, {}, {}, {}, {}, {}};
  const auto probe = [&](const std::vector<markers::Pattern>& set, const char* kind,
                         std::optional<markers::ByteRange>& where) {
    const auto hit = markers::find_first(set, tokens);
    if (!hit) return false;
    where = markers::sentence_at(text, tokens[hit->match.first_token].begin);
    a.matched.push_back(std::string(kind) + ":" + set[hit->pattern].source());
    return true;
  };
  // every kind is probed so the analysis reports all markers present
  const bool claim = probe(m.claim, "claim", a.claim);
  const bool evidence = probe(m.evidence, "evidence", a.evidence);
  const bool mechanism = probe(m.mechanism, "mechanism", a.mechanism);
  const bool counter = probe(m.counter, "counter", a.counter);
  int level = 0;
  if (claim) {
    level = 1;
    if (evidence) {
      level = 2;
      if (mechanism) level = counter ? 4 : 3;
    }
  }
  a.level = RubricLevel{level};
  return a;
}

std::string reply_for(const ArgumentAssessment& assessment, std::string_view response_text) {
  Json highlights = Json::array();
  for (const auto& h : assessment.highlights) {
    highlights.push_back(
        {{"kind", to_string(h.kind)}, {"quote", unicode::scalar_substr(response_text, h.start, h.end)}});
  }
  return Json{{"level", assessment.level.value()},
              {"explanation", assessment.explanation},
              {"claim", assessment.claim_summary},
              {"highlights", std::move(highlights)}}
      .dump();
}

namespace {

std::string marker_of(const HeuristicAnalysis& a, std::string_view kind) {
  for (const auto& m : a.matched) {
    if (m.starts_with(kind) && m.size() > kind.size() && m[kind.size()] == ':') {
      return "'" + m.substr(kind.size() + 1) + "'";
    }
  }
  return {};
}

ArgumentAssessment heuristic_assessment(std::string_view text, const HeuristicMarkers& m) {
  const auto analysis = analyze_argument(text, m);
  const int level = analysis.level.value();
  ArgumentAssessment out;
  out.level = analysis.level;
  const auto span = [&](ComponentKind kind, const markers::ByteRange& r) {
    out.highlights.push_back(ComponentSpan{kind, unicode::scalar_offset(text, r.begin),
                                           unicode::scalar_offset(text, r.end)});
  };
  if (level >= 1) {
    span(ComponentKind::Claim, *analysis.claim);
    std::string claim(text.substr(analysis.claim->begin, analysis.claim->end - analysis.claim->begin));
    const auto because = unicode::ascii_lower(claim).find(" because ");
    if (because != std::string::npos) claim.resize(because);
    while (!claim.empty() && (claim.back() == '.' || claim.back() == '!' || claim.back() == '?' ||
                              claim.back() == ',' || claim.back() == ' ')) {
      claim.pop_back();
    }
    out.claim_summary = claim.empty() ? "(claim)" : claim;
  }
  if (level >= 2) span(ComponentKind::Evidence, *analysis.evidence);
  if (level >= 3) span(ComponentKind::Reasoning, *analysis.mechanism);
  if (level >= 4) span(ComponentKind::Rebuttal, *analysis.counter);

  switch (level) {
    case 0:
      out.explanation = "No relevant claim found.";
      break;
    case 1:
      out.explanation = "Claim present (" + marker_of(analysis, "claim") + ") but no cited evidence.";
      break;
    case 2:
      out.explanation = "Claim with cited evidence (" + marker_of(analysis, "evidence") +
                        "); nothing explains why the evidence supports the claim.";
      break;
    case 3:
      out.explanation = "Claim, evidence and reasoning (" + marker_of(analysis, "mechanism") +
                        "); no counterargument addressed.";
      break;
    default:
      out.explanation = "Claim, evidence and reasoning, and an alternate position is addressed (" +
                        marker_of(analysis, "counter") + ").";
      break;
  }
  out.explanation += " [offline heuristic]";
  return out;
}

class HeuristicBackend final : public Backend {
 public:
  explicit HeuristicBackend(HeuristicMarkers markers) : markers_(std::move(markers)) {}
  std::string name() const override { return "heuristic"; }
  std::string score_reply(const ScoreRequest& request) override {
    return reply_for(heuristic_assessment(request.response_text, markers_), request.response_text);
  }

 private:
  HeuristicMarkers markers_;
};

std::string normalized_text(std::string_view text) { return unicode::trim_trailing(unicode::nfc(text)); }

class FixtureBackend final : public Backend {
 public:
  FixtureBackend(std::map<std::string, ArgumentAssessment> table, HeuristicMarkers markers)
      : fallback_(std::move(markers)) {
    for (auto& [text, assessment] : table) table_.insert_or_assign(normalized_text(text), std::move(assessment));
  }
  std::string name() const override { return "fixture"; }
  std::string score_reply(const ScoreRequest& request) override {
    const auto it = table_.find(normalized_text(request.response_text));
    if (it == table_.end()) return fallback_.score_reply(request);
    return reply_for(it->second, request.response_text);
  }

 private:
  std::map<std::string, ArgumentAssessment> table_;
  HeuristicBackend fallback_;
};

}  // namespace

std::unique_ptr<Backend> heuristic_backend(HeuristicMarkers markers) {
  return std::make_unique<HeuristicBackend>(std::move(markers));
}

std::unique_ptr<Backend> fixture_backend(std::map<std::string, ArgumentAssessment> table,
                                         HeuristicMarkers markers) {
  return std::make_unique<FixtureBackend>(std::move(table), std::move(markers));
}

std::map<std::string, ArgumentAssessment> fixture_table_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::ParseError, "fixture table must be a JSON array");
  std::map<std::string, ArgumentAssessment> table;
  for (const auto& entry : j) {
    if (!entry.is_object() || !entry.contains("text") || !entry["text"].is_string()) {
      throw Error(ErrorKind::ParseError, "fixture entries need a string \"text\"");
    }
    const std::string text = normalized_text(entry["text"].get<std::string>());
    Json body = entry;
    body.erase("text");
    if (!body.contains("student_id")) body["student_id"] = "";
    auto assessment = decode<ArgumentAssessment>(body, "fixture entry");
    for (const auto& h : assessment.highlights) validate_span(h, text);
    if (!table.emplace(text, std::move(assessment)).second) {
      throw Error(ErrorKind::ParseError, "duplicate fixture text: " + text);
    }
  }
  return table;
}

std::map<std::string, ArgumentAssessment> rubric_examples_fixture(const std::filesystem::path& root) {
  return fixture_table_from_json(
      parse_json(assets::load("fixtures/rubric_examples.json", root), "fixtures/rubric_examples.json"));
}

std::unique_ptr<Backend> make_backend(std::string_view name, const BackendSelection& selection) {
  if (name == "heuristic") return heuristic_backend(HeuristicMarkers::load(selection.asset_root));
  if (name == "fixture") {
    auto table = selection.fixture_file.empty()
                     ? rubric_examples_fixture(selection.asset_root)
                     : fixture_table_from_json(parse_json(assets::read_file(selection.fixture_file),
                                                          selection.fixture_file.string()));
    return fixture_backend(std::move(table), HeuristicMarkers::load(selection.asset_root));
  }
  if (name == "live") {
    auto backend = live_backend(selection.live);
    if (!selection.cache_dir.empty()) backend = caching_backend(std::move(backend), selection.cache_dir);
    return backend;
  }
  throw Error(ErrorKind::InvalidArgument,
              "unknown backend '" + std::string(name) + "' (expected live, fixture or heuristic)");
}

void to_json(Json& j, const ItemError& v) {
  j = Json{{"student_id", v.student_id}, {"error", to_string(v.kind)}, {"message", v.message}};
}

void to_json(Json& j, const ClassScores& v) {
  j = Json{{"assessments", v.assessments}, {"errors", v.errors}, {"warnings", v.warnings}};
}

}  // namespace arguagent
