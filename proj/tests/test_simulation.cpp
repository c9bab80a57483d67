// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"

#include "arguagent/simulation.hpp"
#include "oracles.hpp"

using namespace arguagent;
using namespace arguagent::sim;

TEST_CASE("config validation") {
  SimulationConfig c;
  CHECK_NOTHROW(c.validate());
  c.level_distribution = {0.11, 0.28, 0.32, 0.16, 0.12};  // sums to 0.99
  CHECK_THROWS_AS(c.validate(), Error);
  c.level_distribution = {1.2, -0.2, 0, 0, 0};
  CHECK_THROWS_AS(c.validate(), Error);
  c = SimulationConfig{};
  c.class_size = 2;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SimulationConfig{};
  c.group_size = 1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("default distribution keeps the reference proportions") {
  const SimulationConfig c;
  const double shares[] = {11, 28, 32, 16, 12};
  for (int i = 0; i < 5; ++i) {
    CHECK(c.level_distribution[i] / c.level_distribution[0] == doctest::Approx(shares[i] / 11));
  }
}

TEST_CASE("sample_class") {
  SimulationConfig c;
  c.level_distribution = {1, 0, 0, 0, 0};
  for (const auto& s : sample_class(c, 0).students) CHECK(s.level.value() == 0);

  c = SimulationConfig{};
  c.seed = 9;
  const auto a = sample_class(c, 3);
  CHECK(a == sample_class(c, 3));
  CHECK(a.students.size() == 24);
  CHECK_FALSE(a == sample_class(c, 4));
  for (const auto& s : a.students) {
    CHECK(s.cluster_id >= 0);
    CHECK(s.cluster_id < 4);
  }
}

TEST_CASE("empirical level frequencies are within 3 standard errors") {
  SimulationConfig c;
  c.seed = 17;
  std::array<int, 5> counts{};
  int total = 0;
  for (int k = 0; k < c.n_classes; ++k) {
    for (const auto& s : sample_class(c, k).students) {
      ++counts[s.level.value()];
      ++total;
    }
  }
  for (int l = 0; l < 5; ++l) {
    const double p = c.level_distribution[l];
    const double se = std::sqrt(p * (1 - p) / total);
    CHECK(std::abs(static_cast<double>(counts[l]) / total - p) < 3 * se);
  }
}

TEST_CASE("report is identical for any thread count") {
  SimulationConfig c;
  c.n_classes = 30;
  c.seed = 4;
  const auto one = emit_report(run_simulation(c, 1), ReportFormat::Json);
  CHECK(emit_report(run_simulation(c, 3), ReportFormat::Json) == one);
  CHECK(emit_report(run_simulation(c, 8), ReportFormat::Json) == one);
}

TEST_CASE("rate coherence and dominance over seeds") {
  SimulationConfig c;
  c.n_classes = 25;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    c.seed = seed;
    const auto r = run_simulation(c);
    for (const auto* p : {&r.random, &r.optimizer}) {
      CHECK(p->both_criteria_rate <= std::min(p->level_criterion_rate, p->position_criterion_rate));
      CHECK(p->group_count == 200);
    }
    CHECK(r.optimizer.both_criteria_rate >= r.random.both_criteria_rate);
  }
}

TEST_CASE("boundary configurations") {
  SUBCASE("single triple with point mass") {
    SimulationConfig c;
    c.n_classes = 1;
    c.class_size = 3;
    c.level_distribution = {0, 0, 1, 0, 0};
    c.n_clusters = 2;
    const auto r = run_simulation(c);
    CHECK(r.random.level_criterion_rate == 1.0);
    CHECK(r.optimizer.level_criterion_rate == 1.0);
    const auto students = sample_class(c, 0).students;
    const bool uniform = students[0].cluster_id == students[1].cluster_id &&
                         students[1].cluster_id == students[2].cluster_id;
    CHECK(r.optimizer.position_criterion_rate == (uniform ? 0.0 : 1.0));
  }
  SUBCASE("one group per class") {
    SimulationConfig c;
    c.n_classes = 10;
    c.group_size = 24;
    const auto r = run_simulation(c);
    CHECK(r.random.group_count == 10);
    CHECK(r.optimizer.group_count == 10);
  }
}

TEST_CASE("report formats") {
  SimulationConfig c;
  c.n_classes = 5;
  const auto r = run_simulation(c);
  const auto j = parse_json(emit_report(r, ReportFormat::Json));
  const auto back = decode<SimulationReport>(j);
  CHECK(emit_report(back, ReportFormat::Json) == emit_report(r, ReportFormat::Json));

  const auto table = emit_report(r, ReportFormat::Table);
  for (const char* column : {"±1 Level", "Mixed Positions", "Both Criteria", "vs Random"}) {
    CHECK(table.find(column) != std::string::npos);
  }
  CHECK(table.find("Random assignment") != std::string::npos);
  CHECK(table.find("Optimizer grouping") != std::string::npos);
  CHECK(table.find("1.0×") != std::string::npos);

  CHECK_THROWS_AS(decode<SimulationConfig>(parse_json(R"({"n_classes": 3, "bogus": 1})")), Error);
  const auto cfg = decode<SimulationConfig>(parse_json(R"({"n_classes": 3, "seed": 8})"));
  CHECK(cfg.n_classes == 3);
  CHECK(cfg.seed == 8);
  CHECK(cfg.class_size == 24);
}
