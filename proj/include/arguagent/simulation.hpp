// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo comparison of the group optimizer against random assignment
// on synthetic classes.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "arguagent/grouping.hpp"
#include "arguagent/json_io.hpp"

namespace arguagent::sim {

struct SimulationConfig {
  int n_classes = 100;
  int class_size = 24;
  int group_size = 3;
  /// Reference level shares 11/28/32/16/12 % sum to 99 %; they are scaled
  /// by 1/0.99 so the distribution sums to 1.
  std::array<double, RubricLevel::kCount> level_distribution{11.0 / 99, 28.0 / 99, 32.0 / 99, 16.0 / 99,
                                                             12.0 / 99};
  int n_clusters = 4;
  std::uint64_t seed = 0;
  int restarts = 5;

  /// Throws InvalidDistribution (negative entry or sum off 1 by > 1e-9) or
  /// InvalidArgument for non-positive counts.
  void validate() const;
};

struct PolicyStats {
  double level_criterion_rate = 0;
  double position_criterion_rate = 0;
  double both_criteria_rate = 0;
  int group_count = 0;
};

struct SimulationReport {
  PolicyStats random;
  PolicyStats optimizer;
  /// optimizer both-rate / random both-rate; absent when the random rate is 0.
  std::optional<double> improvement_ratio;
  SimulationConfig config;
  std::uint64_t seed = 0;
};

/// One synthetic class. The generator is derived from (seed, class_index),
/// so a class's contents do not depend on which other classes are sampled.
/// Student ids are "s" + zero-padded index, so id order is index order.
grouping::GroupingInput sample_class(const SimulationConfig& config, int class_index);

/// Runs both policies on every sampled class. `threads` <= 0 means one
/// worker per hardware thread; the report is identical for any value.
SimulationReport run_simulation(const SimulationConfig& config, int threads = 0);

enum class ReportFormat { Json, Table };

std::string emit_report(const SimulationReport& report, ReportFormat format);

void to_json(Json& j, const SimulationConfig& v);
void from_json(const Json& j, SimulationConfig& v);
void to_json(Json& j, const PolicyStats& v);
void from_json(const Json& j, PolicyStats& v);
void to_json(Json& j, const SimulationReport& v);
void from_json(const Json& j, SimulationReport& v);

}  // namespace arguagent::sim
