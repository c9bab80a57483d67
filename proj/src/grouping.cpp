// SPDX-License-Identifier: Apache-2.0

#include "arguagent/grouping.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include "arguagent/rng.hpp"

namespace arguagent {

namespace {

ScoreBreakdown score_from(int level_span, bool mixed) {
  ScoreBreakdown s;
  s.level_score = level_span > 1    ? ScoreBreakdown::kSpanViolation
                  : level_span == 1 ? ScoreBreakdown::kSpanOne
                                    : ScoreBreakdown::kSpanZero;
  s.position_score = mixed ? ScoreBreakdown::kMixedPositions : ScoreBreakdown::kUniformPosition;
  s.total = s.level_score + s.position_score;
  return s;
}

}  // namespace

Group Group::of(std::span<const GroupMember> members) {
  if (members.size() < 2) {
    throw Error(ErrorKind::GroupTooSmall, "a group needs at least two members");
  }
  Group g;
  g.min_level_ = RubricLevel::kMax;
  g.max_level_ = RubricLevel::kMin;
  for (const auto& m : members) {
    g.member_ids_.push_back(m.student_id);
    g.min_level_ = std::min(g.min_level_, m.level.value());
    g.max_level_ = std::max(g.max_level_, m.level.value());
    g.mixed_positions_ = g.mixed_positions_ || m.cluster_id != members.front().cluster_id;
  }
  g.score_ = score_from(g.max_level_ - g.min_level_, g.mixed_positions_);
  return g;
}

Group Group::restore(std::vector<std::string> member_ids, int min_level, int max_level,
                     const ScoreBreakdown& score, bool meets_level, bool meets_position) {
  const auto fail = [](const std::string& why) { throw Error(ErrorKind::ParseError, why); };
  if (member_ids.size() < 2) fail("group needs at least two members");
  static_cast<void>(RubricLevel{min_level});
  static_cast<void>(RubricLevel{max_level});
  if (min_level > max_level) fail("group level_span has min > max");
  Group g;
  g.member_ids_ = std::move(member_ids);
  g.min_level_ = min_level;
  g.max_level_ = max_level;
  g.mixed_positions_ = meets_position;
  g.score_ = score_from(max_level - min_level, meets_position);
  if (!(g.score_ == score)) fail("group scores disagree with level span / position flag");
  if (meets_level != g.meets_level_criterion()) fail("meets_level_criterion disagrees with level span");
  return g;
}

namespace grouping {

ScoreBreakdown group_score(std::span<const GroupMember> members) {
  return Group::of(members).score();
}

std::vector<int> group_sizes(int class_size, int group_size) {
  if (group_size < 2) {
    throw Error(ErrorKind::GroupTooSmall,
                "group size must be at least 2, got " + std::to_string(group_size));
  }
  if (class_size < group_size) {
    throw Error(ErrorKind::ClassTooSmall, "class of " + std::to_string(class_size) +
                                              " cannot fill a group of " +
                                              std::to_string(group_size));
  }
  const int full = class_size / group_size;
  const int remainder = class_size % group_size;
  std::vector<int> sizes(static_cast<std::size_t>(full), group_size);
  if (remainder == 1) {
    if (group_size == 4) {
      sizes.back() = 3;
      sizes.push_back(2);
    } else {
      sizes.back() += 1;
    }
  } else if (remainder > 1) {
    sizes.push_back(remainder);
  }
  return sizes;
}

GroupingInput normalized(GroupingInput input) {
  std::sort(input.students.begin(), input.students.end(),
            [](const GroupMember& a, const GroupMember& b) { return a.student_id < b.student_id; });
  for (std::size_t i = 1; i < input.students.size(); ++i) {
    if (input.students[i].student_id == input.students[i - 1].student_id) {
      throw Error(ErrorKind::DuplicateStudentId,
                  "duplicate student id '" + input.students[i].student_id + "'");
    }
  }
  if (input.students.size() < 2) {
    throw Error(ErrorKind::ClassTooSmall, "grouping needs at least two students");
  }
  return input;
}

namespace {

using Partition = std::vector<std::vector<int>>;

// Index-based scorer over the normalized roster.
class Scorer {
 public:
  explicit Scorer(const GroupingInput& input) {
    levels_.reserve(input.students.size());
    clusters_.reserve(input.students.size());
    for (const auto& s : input.students) {
      levels_.push_back(s.level.value());
      clusters_.push_back(s.cluster_id);
    }
  }

  int level(int i) const { return levels_[static_cast<std::size_t>(i)]; }
  int cluster(int i) const { return clusters_[static_cast<std::size_t>(i)]; }

  int score(std::span<const int> members) const {
    int lo = RubricLevel::kMax;
    int hi = RubricLevel::kMin;
    bool mixed = false;
    for (const int m : members) {
      lo = std::min(lo, level(m));
      hi = std::max(hi, level(m));
      mixed = mixed || cluster(m) != cluster(members.front());
    }
    return score_from(hi - lo, mixed).total;
  }

 private:
  std::vector<int> levels_;
  std::vector<int> clusters_;
};

// Level-sorted greedy construction. Students are shuffled with the restart's
// generator and stably sorted by level; each group starts from the lowest-level
// unassigned student and adds the companion maximizing the group score, ties
// broken by an unseen cluster first and then by `tie_rank` (lowest first).
Partition greedy_construct(const Scorer& scorer, std::span<const int> sizes,
                           std::span<const int> order, std::span<const int> tie_rank) {
  const auto n = order.size();
  std::vector<bool> assigned(n, false);
  Partition groups;
  groups.reserve(sizes.size());
  std::size_t cursor = 0;
  for (const int size : sizes) {
    while (assigned[static_cast<std::size_t>(order[cursor])]) ++cursor;
    std::vector<int> group{order[cursor]};
    assigned[static_cast<std::size_t>(order[cursor])] = true;

    while (static_cast<int>(group.size()) < size) {
      int best = -1;
      int best_score = 0;
      bool best_unseen = false;
      for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i);
        if (assigned[i]) continue;
        group.push_back(c);
        const int s = scorer.score(group);
        group.pop_back();
        const bool unseen = std::none_of(group.begin(), group.end(), [&](int m) {
          return scorer.cluster(m) == scorer.cluster(c);
        });
        const bool better =
            best < 0 || s > best_score ||
            (s == best_score &&
             (unseen != best_unseen ? unseen
                                    : tie_rank[i] < tie_rank[static_cast<std::size_t>(best)]));
        if (better) {
          best = c;
          best_score = s;
          best_unseen = unseen;
        }
      }
      group.push_back(best);
      assigned[static_cast<std::size_t>(best)] = true;
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

// First-improvement hill climbing over two move kinds: a swap of two
// students between groups, and relocation of one student from a group of
// size s + 1 into a group of size s (which keeps the multiset of group sizes).
// When no single move improves, depth-2 compound moves are tried: any first
// move followed by a second that makes the pair strictly improving. Every
// accepted step strictly increases the integer total, which is bounded, so
// the climb terminates.
class HillClimber {
 public:
  HillClimber(const Scorer& scorer, Partition& groups) : scorer_(scorer), groups_(groups) {
    scores_.reserve(groups.size());
    for (const auto& g : groups) scores_.push_back(scorer.score(g));
  }

  int run() {
    while (improve_once(0) || compound_once()) {
    }
    return std::accumulate(scores_.begin(), scores_.end(), 0);
  }

 private:
  struct Move {
    bool relocate = false;
    std::size_t a = 0;  // swap: both groups; relocate: from a to b
    std::size_t b = 0;
    std::size_t i = 0;  // member index in a
    std::size_t j = 0;  // member index in b (swap only)
  };

  // Applies the move, re-scores the two groups, returns the gain.
  int apply(const Move& m) {
    auto& ga = groups_[m.a];
    auto& gb = groups_[m.b];
    if (m.relocate) {
      gb.push_back(ga[m.i]);
      ga.erase(ga.begin() + static_cast<std::ptrdiff_t>(m.i));
    } else {
      std::swap(ga[m.i], gb[m.j]);
    }
    const int before = scores_[m.a] + scores_[m.b];
    scores_[m.a] = scorer_.score(ga);
    scores_[m.b] = scorer_.score(gb);
    return scores_[m.a] + scores_[m.b] - before;
  }

  void undo(const Move& m) {
    auto& ga = groups_[m.a];
    auto& gb = groups_[m.b];
    if (m.relocate) {
      ga.insert(ga.begin() + static_cast<std::ptrdiff_t>(m.i), gb.back());
      gb.pop_back();
    } else {
      std::swap(ga[m.i], gb[m.j]);
    }
    scores_[m.a] = scorer_.score(ga);
    scores_[m.b] = scorer_.score(gb);
  }

  // Calls visit(move) for every move in a fixed order until it returns true.
  template <typename Visit>
  bool for_each_move(Visit&& visit) {
    for (std::size_t a = 0; a < groups_.size(); ++a) {
      for (std::size_t b = a + 1; b < groups_.size(); ++b) {
        for (std::size_t i = 0; i < groups_[a].size(); ++i) {
          for (std::size_t j = 0; j < groups_[b].size(); ++j) {
            if (visit(Move{false, a, b, i, j})) return true;
          }
        }
        for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
          if (groups_[from].size() != groups_[to].size() + 1) continue;
          for (std::size_t i = 0; i < groups_[from].size(); ++i) {
            if (visit(Move{true, from, to, i, 0})) return true;
          }
        }
      }
    }
    return false;
  }

  // One sweep applying every move whose gain exceeds `threshold`; returns
  // whether anything was applied. With threshold > 0 it stops at the first.
  bool improve_once(int threshold) {
    bool improved = false;
    for_each_move([&](const Move& m) {
      if (apply(m) > threshold) {
        improved = true;
        return threshold > 0;
      }
      undo(m);
      return false;
    });
    return improved;
  }

  bool compound_once() {
    return for_each_move([&](const Move& first) {
      const int gain = apply(first);
      if (improve_once(std::max(0, -gain))) return true;
      undo(first);
      return false;
    });
  }

  const Scorer& scorer_;
  Partition& groups_;
  std::vector<int> scores_;
};

ClassGrouping materialize(const GroupingInput& input, Partition groups, std::string policy,
                          std::uint64_t seed) {
  ClassGrouping out;
  out.class_id = input.class_id;
  out.policy = std::move(policy);
  out.seed = seed;
  for (auto& members : groups) {
    std::sort(members.begin(), members.end());
    std::vector<GroupMember> picked;
    picked.reserve(members.size());
    for (const int m : members) picked.push_back(input.students[static_cast<std::size_t>(m)]);
    out.groups.push_back(Group::of(picked));
  }
  out.refresh_summary();
  return out;
}

// Restart r fills the odd-sized group (if any) at position r modulo the
// group count instead of always last.
std::vector<int> fill_order(std::vector<int> sizes, int restart) {
  if (sizes.size() < 2 || sizes.back() == sizes.front()) return sizes;
  const int odd = sizes.back();
  sizes.pop_back();
  const auto slot = static_cast<std::size_t>(restart) % (sizes.size() + 1);
  sizes.insert(sizes.begin() + static_cast<std::ptrdiff_t>(sizes.size() - slot), odd);
  return sizes;
}

}  // namespace

ClassGrouping form_groups(const GroupingInput& raw, const OptimizerOptions& options) {
  if (options.restarts < 1) {
    throw Error(ErrorKind::InvalidArgument, "restarts must be at least 1");
  }
  const auto sizes = group_sizes(static_cast<int>(raw.students.size()), options.group_size);
  const GroupingInput input = normalized(raw);
  const Scorer scorer(input);
  const int n = static_cast<int>(input.students.size());

  Partition best;
  int best_total = 0;
  for (int restart = 0; restart < options.restarts; ++restart) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(restart)));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<int>(order));
    // restart 0 breaks companion ties by lowest student_id; later restarts
    // use their shuffled order so that restarts explore different starts
    std::vector<int> tie_rank(order.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      tie_rank[static_cast<std::size_t>(order[pos])] =
          restart == 0 ? order[pos] : static_cast<int>(pos);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scorer.level(a) < scorer.level(b); });
    Partition groups = greedy_construct(scorer, fill_order(sizes, restart), order, tie_rank);
    const int total = HillClimber(scorer, groups).run();
    if (best.empty() || total > best_total) {
      best = std::move(groups);
      best_total = total;
    }
  }
  return materialize(input, std::move(best), "optimizer", options.seed);
}

ClassGrouping random_grouping(const GroupingInput& raw, int group_size, std::uint64_t seed) {
  const auto sizes = group_sizes(static_cast<int>(raw.students.size()), group_size);
  const GroupingInput input = normalized(raw);
  std::vector<int> order(input.students.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<int>(order));

  Partition groups;
  auto it = order.begin();
  for (const int size : sizes) {
    groups.emplace_back(it, it + size);
    it += size;
  }
  return materialize(input, std::move(groups), "random", seed);
}

ClassGrouping regroup_manual(const GroupingInput& raw,
                             const std::vector<std::vector<std::string>>& member_lists) {
  const GroupingInput input = normalized(raw);
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < input.students.size(); ++i) {
    index.emplace(input.students[i].student_id, static_cast<int>(i));
  }
  std::vector<bool> seen(input.students.size(), false);
  Partition groups;
  for (const auto& list : member_lists) {
    if (list.empty()) continue;
    if (list.size() < 2) {
      throw Error(ErrorKind::GroupTooSmall, "group with single member '" + list.front() + "'");
    }
    std::vector<int> members;
    for (const auto& id : list) {
      const auto found = index.find(id);
      if (found == index.end()) throw Error(ErrorKind::UnknownStudent, "unknown student '" + id + "'");
      if (seen[static_cast<std::size_t>(found->second)]) {
        throw Error(ErrorKind::InvalidEdit, "student '" + id + "' appears in more than one group");
      }
      seen[static_cast<std::size_t>(found->second)] = true;
      members.push_back(found->second);
    }
    groups.push_back(std::move(members));
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw Error(ErrorKind::InvalidEdit,
                  "student '" + input.students[i].student_id + "' dropped from grouping");
    }
  }
  auto out = materialize(input, std::move(groups), "manual", 0);
  out.seed.reset();
  return out;
}

}  // namespace grouping
}  // namespace arguagent
