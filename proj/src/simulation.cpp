// SPDX-License-Identifier: Apache-2.0

#include "arguagent/simulation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "arguagent/rng.hpp"
#include "arguagent/unicode.hpp"

namespace arguagent::sim {

void SimulationConfig::validate() const {
  double sum = 0.0;
  for (const double p : level_distribution) {
    if (!(p >= 0.0)) {
      throw Error(ErrorKind::InvalidDistribution, "level probabilities must be non-negative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidDistribution,
                "level probabilities must sum to 1 (got " + std::to_string(sum) + ")");
  }
  if (n_classes < 1 || class_size < 2 || n_clusters < 1 || restarts < 1) {
    throw Error(ErrorKind::InvalidArgument,
                "n_classes, n_clusters and restarts must be >= 1 and class_size >= 2");
  }
  // surfaces GroupTooSmall / ClassTooSmall before any work is done
  static_cast<void>(grouping::group_sizes(class_size, group_size));
}

grouping::GroupingInput sample_class(const SimulationConfig& config, int class_index) {
  config.validate();
  Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(class_index)));
  const int width = static_cast<int>(std::to_string(config.class_size - 1).size());

  grouping::GroupingInput input;
  input.class_id = "class-" + std::to_string(class_index);
  input.students.reserve(static_cast<std::size_t>(config.class_size));
  for (int i = 0; i < config.class_size; ++i) {
    const double u = rng.uniform();
    int level = 0;
    double cumulative = config.level_distribution[0];
    // the last level with positive mass absorbs rounding slack in the CDF
    while (level < RubricLevel::kMax && u >= cumulative) {
      ++level;
      cumulative += config.level_distribution[static_cast<std::size_t>(level)];
    }
    while (config.level_distribution[static_cast<std::size_t>(level)] == 0.0 && level > 0) --level;
    const auto cluster = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.n_clusters)));

    char id[32];
    std::snprintf(id, sizeof id, "s%0*d", width, i);
    input.students.push_back(GroupMember{id, RubricLevel{level}, cluster});
  }
  return input;
}

namespace {

struct Counts {
  int groups = 0;
  int level = 0;
  int position = 0;
  int both = 0;

  void add(const GroupingSummary& s) {
    groups += s.groups;
    level += s.meets_level_criterion;
    position += s.meets_position_criterion;
    both += s.meets_both;
  }

  PolicyStats stats() const {
    PolicyStats p;
    p.group_count = groups;
    if (groups > 0) {
      p.level_criterion_rate = static_cast<double>(level) / groups;
      p.position_criterion_rate = static_cast<double>(position) / groups;
      p.both_criteria_rate = static_cast<double>(both) / groups;
    }
    return p;
  }
};

}  // namespace

SimulationReport run_simulation(const SimulationConfig& config, int threads) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.n_classes);
  std::vector<GroupingSummary> random_results(n);
  std::vector<GroupingSummary> optimizer_results(n);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t c = next++; c < n; c = next++) {
      const auto input = sample_class(config, static_cast<int>(c));
      random_results[c] =
          grouping::random_grouping(input, config.group_size, derive_seed(config.seed, c, 1))
              .summary;
      grouping::OptimizerOptions options;
      options.group_size = config.group_size;
      options.seed = derive_seed(config.seed, c, 2);
      options.restarts = config.restarts;
      optimizer_results[c] = grouping::form_groups(input, options).summary;
    }
  };

  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n));
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();

  Counts random_counts;
  Counts optimizer_counts;
  for (std::size_t c = 0; c < n; ++c) {
    random_counts.add(random_results[c]);
    optimizer_counts.add(optimizer_results[c]);
  }

  SimulationReport report;
  report.random = random_counts.stats();
  report.optimizer = optimizer_counts.stats();
  if (report.random.both_criteria_rate > 0.0) {
    report.improvement_ratio = report.optimizer.both_criteria_rate / report.random.both_criteria_rate;
  }
  report.config = config;
  report.seed = config.seed;
  return report;
}

namespace {

std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", rate * 100.0);
  return buf;
}

std::string ratio(std::optional<double> r) {
  if (!r) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f×", *r);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  const auto len = unicode::scalar_length(s);
  return len >= width ? s : std::string(width - len, ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  const auto len = unicode::scalar_length(s);
  return len >= width ? s : s + std::string(width - len, ' ');
}

}  // namespace

std::string emit_report(const SimulationReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) return to_text(Json(report));

  const std::vector<std::string> header{"Algorithm", "±1 Level", "Mixed Positions",
                                        "Both Criteria", "vs Random"};
  const std::vector<std::vector<std::string>> rows{
      {"Random assignment", percent(report.random.level_criterion_rate),
       percent(report.random.position_criterion_rate), percent(report.random.both_criteria_rate),
       ratio(report.improvement_ratio ? std::optional<double>(1.0) : std::nullopt)},
      {"Optimizer grouping", percent(report.optimizer.level_criterion_rate),
       percent(report.optimizer.position_criterion_rate),
       percent(report.optimizer.both_criteria_rate), ratio(report.improvement_ratio)},
  };
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = unicode::scalar_length(header[c]);
    for (const auto& row : rows) widths[c] = std::max(widths[c], unicode::scalar_length(row[c]));
  }
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& cells) {
    out << pad_right(cells[0], widths[0]);
    for (std::size_t c = 1; c < cells.size(); ++c) out << "  " << pad_left(cells[c], widths[c]);
    out << '\n';
  };
  line(header);
  for (const auto& row : rows) line(row);
  out << "\n" << report.optimizer.group_count << " groups per policy; " << report.config.n_classes
      << " classes of " << report.config.class_size << "; seed " << report.seed << "\n";
  return out.str();
}

void to_json(Json& j, const SimulationConfig& v) {
  j = Json{{"n_classes", v.n_classes},
           {"class_size", v.class_size},
           {"group_size", v.group_size},
           {"level_distribution", v.level_distribution},
           {"n_clusters", v.n_clusters},
           {"seed", v.seed},
           {"restarts", v.restarts}};
}

void from_json(const Json& j, SimulationConfig& v) {
  static const std::set<std::string> kKeys{"n_classes",  "class_size", "group_size", "level_distribution",
                                           "n_clusters", "seed",       "restarts"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) {
      throw Error(ErrorKind::ParseError, "unknown simulation config key '" + key + "'");
    }
  }
  v = SimulationConfig{};
  v.n_classes = j.value("n_classes", v.n_classes);
  v.class_size = j.value("class_size", v.class_size);
  v.group_size = j.value("group_size", v.group_size);
  if (j.contains("level_distribution")) {
    const auto probs = j.at("level_distribution").get<std::vector<double>>();
    if (probs.size() != v.level_distribution.size()) {
      throw Error(ErrorKind::InvalidDistribution, "level_distribution needs exactly 5 entries");
    }
    std::copy(probs.begin(), probs.end(), v.level_distribution.begin());
  }
  v.n_clusters = j.value("n_clusters", v.n_clusters);
  v.seed = j.value("seed", v.seed);
  v.restarts = j.value("restarts", v.restarts);
}

void to_json(Json& j, const PolicyStats& v) {
  j = Json{{"level_criterion_rate", v.level_criterion_rate},
           {"position_criterion_rate", v.position_criterion_rate},
           {"both_criteria_rate", v.both_criteria_rate},
           {"group_count", v.group_count}};
}

void from_json(const Json& j, PolicyStats& v) {
  v.level_criterion_rate = j.at("level_criterion_rate").get<double>();
  v.position_criterion_rate = j.at("position_criterion_rate").get<double>();
  v.both_criteria_rate = j.at("both_criteria_rate").get<double>();
  v.group_count = j.at("group_count").get<int>();
}

void to_json(Json& j, const SimulationReport& v) {
  j = Json{{"policies", {{"random", v.random}, {"optimizer", v.optimizer}}},
           {"improvement_ratio", v.improvement_ratio ? Json(*v.improvement_ratio) : Json(nullptr)},
           {"config", v.config},
           {"seed", v.seed}};
}

void from_json(const Json& j, SimulationReport& v) {
  v.random = j.at("policies").at("random").get<PolicyStats>();
  v.optimizer = j.at("policies").at("optimizer").get<PolicyStats>();
  const auto& r = j.at("improvement_ratio");
  v.improvement_ratio = r.is_null() ? std::nullopt : std::optional<double>(r.get<double>());
  v.config = j.at("config").get<SimulationConfig>();
  v.seed = j.at("seed").get<std::uint64_t>();
}

}  // namespace arguagent::sim
