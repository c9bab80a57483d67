// SPDX-License-Identifier: Apache-2.0
//
// Stage two of grouping: partition a class into discussion groups that keep
// every group within one rubric level while mixing position clusters.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arguagent/domain.hpp"

namespace arguagent::grouping {

struct GroupingInput {
  std::string class_id;
  std::vector<GroupMember> students;

  friend bool operator==(const GroupingInput&, const GroupingInput&) = default;
};

/// Scores a group: level span (max - min) of 0 / 1 / >1 gives +10 / +30 / -100;
/// two or more distinct clusters gives +40, a single cluster -20.
/// Throws Error(GroupTooSmall) for fewer than two members.
ScoreBreakdown group_score(std::span<const GroupMember> members);

/// Group sizes used to split `class_size` students with target `group_size`.
///
/// Remainder 1 enlarges one group (group of 4 when the target is 3); a larger
/// remainder r forms one extra group of r. For a target of 4 with remainder 1
/// the enlarged group would have 5 members, so one group of 4 is split into
/// 3 + 2 instead. Sizes are listed in the order groups are filled.
/// Throws GroupTooSmall (group_size < 2) or ClassTooSmall.
std::vector<int> group_sizes(int class_size, int group_size);

struct OptimizerOptions {
  int group_size = 3;
  std::uint64_t seed = 0;
  int restarts = 5;
};

/// Greedy construction plus pairwise-swap hill climbing, repeated for each
/// restart; keeps the best total (earliest restart on ties).
/// Deterministic for a given (input set, seed): input order is normalized
/// by student_id first.
ClassGrouping form_groups(const GroupingInput& input, const OptimizerOptions& options);

/// Uniform random permutation chunked with the same size policy.
ClassGrouping random_grouping(const GroupingInput& input, int group_size, std::uint64_t seed);

/// Recomputes a grouping from explicit member lists (manual edits). Every
/// student must appear exactly once; groups need at least two members.
/// Throws InvalidEdit for drops/duplicates, UnknownStudent for unknown ids.
ClassGrouping regroup_manual(const GroupingInput& input,
                             const std::vector<std::vector<std::string>>& member_lists);

/// Input sorted by student_id; throws DuplicateStudentId / ClassTooSmall.
GroupingInput normalized(GroupingInput input);

}  // namespace arguagent::grouping
