// SPDX-License-Identifier: Apache-2.0

#include "arguagent/stance.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "arguagent/assets.hpp"
#include "arguagent/metrics.hpp"

namespace arguagent {

namespace {

constexpr std::array<StanceCategory, 3> kCategories{StanceCategory::All, StanceCategory::SomeNo,
                                                    StanceCategory::Unsure};

std::size_t index_of(StanceCategory c) { return static_cast<std::size_t>(c); }

std::string offline_label(StanceCategory c) {
  switch (c) {
    case StanceCategory::All: return "ALL: universal claim";
    case StanceCategory::SomeNo: return "SOME_NO: restricted or opposing claim";
    case StanceCategory::Unsure: return "UNSURE: no clear position";
  }
  return "UNSURE: no clear position";
}

}  // namespace

MarkerRuleSet MarkerRuleSet::from_json(const Json& j) {
  MarkerRuleSet set;
  const auto category = [](const std::string& name) {
    const auto c = stance_category_from(name);
    if (!c) throw Error(ErrorKind::ParseError, "unknown stance category '" + name + "'");
    return *c;
  };
  try {
    set.default_category = category(j.value("default", std::string{"UNSURE"}));
    for (const auto& r : j.at("rules")) {
      MarkerRule rule;
      rule.pattern_class = r.value("class", std::string{});
      rule.category = category(r.at("category").get<std::string>());
      rule.patterns = markers::compile(r.at("patterns").get<std::vector<std::string>>());
      set.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("stance rules: ") + e.what());
  }
  return set;
}

MarkerRuleSet MarkerRuleSet::load(const std::filesystem::path& root) {
  return from_json(parse_json(assets::load("stance_rules.json", root), "stance_rules.json"));
}

StanceDecision explain_stance(std::string_view claim_text, const MarkerRuleSet& rules) {
  const auto tokens = markers::tokenize(claim_text);
  for (std::size_t r = 0; r < rules.rules.size(); ++r) {
    for (const auto& pattern : rules.rules[r].patterns) {
      if (pattern.find(tokens)) return StanceDecision{rules.rules[r].category, r, pattern.source()};
    }
  }
  return StanceDecision{rules.default_category, std::nullopt, {}};
}

StanceLabel classify_stance(std::string_view claim_text, const MarkerRuleSet& rules) {
  StanceLabel label;
  label.category = explain_stance(claim_text, rules).category;
  return label;
}

PositionClustering parse_cluster_reply(std::string_view reply, std::span<const std::string> student_ids,
                                       int min_k, int max_k) {
  const auto bad = [](const std::string& why) { throw Error(ErrorKind::InvalidPartition, why); };
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    bad("reply contains no JSON object");
  }
  const auto j = Json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("clusters") || !j["clusters"].is_array()) {
    bad("reply must be an object with a \"clusters\" array");
  }
  PositionClustering clustering;
  int id = 0;
  for (const auto& c : j["clusters"]) {
    if (!c.is_object() || !c.contains("members") || !c["members"].is_array()) {
      bad("every cluster needs a \"members\" array");
    }
    PositionCluster cluster;
    cluster.cluster_id = id++;
    cluster.label = c.contains("label") && c["label"].is_string() ? c["label"].get<std::string>() : "";
    if (cluster.label.empty()) cluster.label = "position " + std::to_string(cluster.cluster_id + 1);
    for (const auto& m : c["members"]) {
      if (!m.is_string()) bad("cluster members must be student id strings");
      cluster.member_ids.push_back(m.get<std::string>());
    }
    std::sort(cluster.member_ids.begin(), cluster.member_ids.end());
    clustering.clusters.push_back(std::move(cluster));
  }
  if (clustering.k() < min_k || clustering.k() > max_k) {
    bad("expected " + std::to_string(min_k) + "-" + std::to_string(max_k) + " clusters, got " +
        std::to_string(clustering.k()));
  }
  validate_clustering(clustering, student_ids);
  return clustering;
}

namespace {

PositionClustering offline_clustering(const std::vector<std::string>& ids,
                                      const std::map<std::string, StanceCategory>& category,
                                      const std::map<std::string, int>& level,
                                      std::vector<std::string>& warnings) {
  std::array<std::vector<std::string>, 3> buckets;
  for (const auto& id : ids) buckets[index_of(category.at(id))].push_back(id);

  PositionClustering clustering;
  for (const auto c : kCategories) {
    auto& members = buckets[index_of(c)];
    if (members.empty()) continue;
    clustering.clusters.push_back(PositionCluster{clustering.k(), offline_label(c), std::move(members)});
  }
  if (clustering.k() == 1 && ids.size() >= 2) {
    PositionCluster only = std::move(clustering.clusters.front());
    std::vector<std::string> even;
    std::vector<std::string> odd;
    for (const auto& id : only.member_ids) (level.at(id) % 2 == 0 ? even : odd).push_back(id);
    std::string how = "level parity";
    std::string first_suffix = " (even levels)";
    std::string second_suffix = " (odd levels)";
    if (even.empty() || odd.empty()) {
      even.clear();
      odd.clear();
      for (std::size_t i = 0; i < only.member_ids.size(); ++i) {
        (i % 2 == 0 ? even : odd).push_back(only.member_ids[i]);
      }
      how = "alternating student id";
      first_suffix = " (A)";
      second_suffix = " (B)";
    }
    warnings.push_back("every claim fell into one stance category; split by " + how + " to form 2 clusters");
    clustering.clusters = {PositionCluster{0, only.label + first_suffix, std::move(even)},
                           PositionCluster{1, only.label + second_suffix, std::move(odd)}};
  }
  validate_clustering(clustering, ids);
  return clustering;
}

}  // namespace

ClusterResult cluster_positions(const std::vector<StudentResponse>& roster,
                                const std::vector<ArgumentAssessment>& assessments, Backend* backend,
                                const MarkerRuleSet& rules, const ClusterOptions& options) {
  std::map<std::string, const ArgumentAssessment*> by_id;
  for (const auto& a : assessments) by_id[a.student_id] = &a;

  std::vector<std::string> ids;
  std::map<std::string, StanceCategory> category;
  std::map<std::string, int> level;
  std::vector<ClusterClaim> claims;
  for (const auto& s : roster) {
    const auto it = by_id.find(s.student_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::InvalidArgument, "no assessment for student '" + s.student_id + "'");
    }
    ids.push_back(s.student_id);
    const std::string& claim = it->second->claim_summary;
    category[s.student_id] = claim.empty() ? StanceCategory::Unsure : *classify_stance(claim, rules).category;
    level[s.student_id] = it->second->level.value();
    claims.push_back(ClusterClaim{s.student_id, claim});
  }
  std::vector<std::string> sorted_ids = ids;
  std::sort(sorted_ids.begin(), sorted_ids.end());
  std::sort(claims.begin(), claims.end(),
            [](const ClusterClaim& a, const ClusterClaim& b) { return a.student_id < b.student_id; });

  ClusterResult result;
  if (backend == nullptr) {
    result.method = "offline";
    result.clustering = offline_clustering(sorted_ids, category, level, result.warnings);
  } else {
    result.method = "model";
    const std::string instruction = options.instruction.empty()
                                        ? assets::load("prompts/v1/cluster.txt")
                                        : options.instruction;
    std::string listing;
    for (const auto& c : claims) {
      listing += c.student_id + ": " + (c.claim.empty() ? "(no claim)" : c.claim) + "\n";
    }
    ClusterRequest request{claims,
                           {{"system", instruction + "\nUse between " + std::to_string(options.min_k) +
                                           " and " + std::to_string(options.max_k) + " clusters."},
                            {"user", listing}},
                           0};
    for (;; ++request.attempt) {
      const std::string reply = backend->cluster_reply(request);
      try {
        result.clustering = parse_cluster_reply(reply, sorted_ids, options.min_k, options.max_k);
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InvalidPartition) throw;
        if (request.attempt >= options.max_retries) {
          throw Error(ErrorKind::InvalidPartition, "invalid partition after " +
                                                       std::to_string(request.attempt + 1) +
                                                       " attempt(s): " + e.what());
        }
        request.messages.push_back({"assistant", reply});
        request.messages.push_back(
            {"user", std::string("That partition is invalid: ") + e.what() +
                         ". Reply again with only the JSON object, placing every student exactly once."});
      }
    }
  }

  for (const auto& id : ids) {
    StanceLabel label;
    label.category = category.at(id);
    for (const auto& c : result.clustering.clusters) {
      if (std::find(c.member_ids.begin(), c.member_ids.end(), id) != c.member_ids.end()) {
        label.cluster_id = c.cluster_id;
        label.cluster_label = c.label;
      }
    }
    result.labels.emplace_back(id, std::move(label));
  }
  return result;
}

StanceAgreement stance_agreement(std::span<const StanceCategory> human, std::span<const StanceCategory> ai) {
  if (human.size() != ai.size() || human.empty()) {
    throw Error(ErrorKind::LengthMismatch, "stance vectors must be non-empty and of equal length");
  }
  StanceAgreement out;
  out.n = static_cast<int>(human.size());
  int correct = 0;
  std::vector<std::string> h_names;
  std::vector<std::string> a_names;
  for (std::size_t i = 0; i < human.size(); ++i) {
    auto& cat = out.per_category[index_of(human[i])];
    ++cat.human_count;
    ++out.confusion[index_of(human[i])][index_of(ai[i])];
    if (human[i] == ai[i]) {
      ++cat.correct;
      ++correct;
    }
    h_names.emplace_back(to_string(human[i]));
    a_names.emplace_back(to_string(ai[i]));
  }
  for (auto& cat : out.per_category) {
    if (cat.human_count > 0) cat.accuracy = static_cast<double>(cat.correct) / cat.human_count;
  }
  out.overall_accuracy = static_cast<double>(correct) / out.n;
  try {
    out.kappa = metrics::cohens_kappa_nominal(h_names, a_names);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateLabels) throw;
    out.flags.emplace_back("kappa_undefined");
  }
  return out;
}

void to_json(Json& j, const StanceAgreement& v) {
  Json per = Json::object();
  Json confusion = Json::object();
  for (const auto c : kCategories) {
    const auto& cat = v.per_category[index_of(c)];
    per[std::string(to_string(c))] = Json{{"human_count", cat.human_count},
                                          {"correct", cat.correct},
                                          {"accuracy", cat.accuracy ? Json(*cat.accuracy) : Json(nullptr)}};
    Json row = Json::object();
    for (const auto p : kCategories) row[std::string(to_string(p))] = v.confusion[index_of(c)][index_of(p)];
    confusion[std::string(to_string(c))] = std::move(row);
  }
  j = Json{{"per_category", std::move(per)},
           {"overall_accuracy", v.overall_accuracy},
           {"overall_accuracy_weighting", "item"},
           {"kappa", v.kappa ? Json(*v.kappa) : Json(nullptr)},
           {"flags", v.flags},
           {"confusion", std::move(confusion)},
           {"n", v.n}};
}

void to_json(Json& j, const ClusterResult& v) {
  Json labels = Json::array();
  for (const auto& [id, label] : v.labels) {
    Json entry = label;
    entry["student_id"] = id;
    labels.push_back(std::move(entry));
  }
  j = Json{{"clustering", v.clustering}, {"labels", std::move(labels)}, {"warnings", v.warnings},
           {"method", v.method}};
}

}  // namespace arguagent
