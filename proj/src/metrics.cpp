// SPDX-License-Identifier: Apache-2.0

#include "arguagent/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <utility>

namespace arguagent::metrics {

namespace {

void check_pair(std::span<const int> a, std::span<const int> b, std::size_t min_len) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::LengthMismatch, "rating vectors differ in length (" +
                                               std::to_string(a.size()) + " vs " +
                                               std::to_string(b.size()) + ")");
  }
  if (a.size() < min_len) {
    throw Error(ErrorKind::LengthMismatch,
                "need at least " + std::to_string(min_len) + " paired ratings");
  }
}

void check_levels(std::span<const int> v) {
  for (const int x : v) static_cast<void>(RubricLevel{x});
}

double round12(double x) { return std::round(x * 1e12) / 1e12; }

}  // namespace

void RatingMatrix::validate() const {
  const auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidMatrix, why); };
  if (coders.size() < 2) fail("a rating matrix needs at least two coders");
  if (items.empty()) fail("a rating matrix needs at least one item");
  if (ratings.size() != coders.size()) fail("ratings must have one row per coder");
  for (const auto& row : ratings) {
    if (row.size() != items.size()) fail("every ratings row must have one cell per item");
    for (const auto& cell : row) {
      if (cell && (*cell < RubricLevel::kMin || *cell > RubricLevel::kMax)) {
        fail("rating " + std::to_string(*cell) + " outside [0, 4]");
      }
    }
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    const bool rated = std::any_of(ratings.begin(), ratings.end(),
                                   [i](const auto& row) { return row[i].has_value(); });
    if (!rated) fail("item '" + items[i] + "' has no ratings");
  }
}

RatingMatrix matrix_from_triples(std::span<const RatingTriple> triples) {
  RatingMatrix m;
  std::map<std::string, std::size_t> coder_index;
  std::map<std::string, std::size_t> item_index;
  for (const auto& t : triples) {
    if (coder_index.emplace(t.coder, m.coders.size()).second) m.coders.push_back(t.coder);
    if (item_index.emplace(t.item, m.items.size()).second) m.items.push_back(t.item);
  }
  m.ratings.assign(m.coders.size(), std::vector<std::optional<int>>(m.items.size()));
  for (const auto& t : triples) {
    auto& cell = m.ratings[coder_index[t.coder]][item_index[t.item]];
    if (cell) {
      throw Error(ErrorKind::InvalidMatrix,
                  "coder '" + t.coder + "' rated item '" + t.item + "' twice");
    }
    cell = t.score;
  }
  m.validate();
  return m;
}

double quadratic_weighted_kappa(std::span<const int> a, std::span<const int> b, int k) {
  check_pair(a, b, 2);
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "QWK needs at least two categories");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] >= k || b[i] < 0 || b[i] >= k) {
      throw Error(ErrorKind::InvalidLevel, "rating outside [0, " + std::to_string(k - 1) + "]");
    }
  }
  const auto n = static_cast<double>(a.size());
  const auto kk = static_cast<std::size_t>(k);
  std::vector<double> observed(kk * kk, 0.0);
  std::vector<double> row(kk, 0.0);
  std::vector<double> col(kk, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = static_cast<std::size_t>(a[i]);
    const auto y = static_cast<std::size_t>(b[i]);
    observed[x * kk + y] += 1.0 / n;
    row[x] += 1.0 / n;
    col[y] += 1.0 / n;
  }
  const double denom_w = static_cast<double>((k - 1) * (k - 1));
  double weighted_observed = 0.0;
  double weighted_expected = 0.0;
  for (std::size_t i = 0; i < kk; ++i) {
    for (std::size_t j = 0; j < kk; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      const double w = d * d / denom_w;
      weighted_observed += w * observed[i * kk + j];
      weighted_expected += w * row[i] * col[j];
    }
  }
  if (weighted_expected == 0.0) {
    throw Error(ErrorKind::DegenerateRatings,
                "QWK undefined: both raters constant at the same value");
  }
  return 1.0 - weighted_observed / weighted_expected;
}

double krippendorff_alpha_ordinal(const RatingMatrix& matrix) {
  matrix.validate();
  constexpr std::size_t K = RubricLevel::kCount;
  std::array<std::array<double, K>, K> coincidence{};
  bool pairable = false;
  for (std::size_t item = 0; item < matrix.items.size(); ++item) {
    std::array<int, K> counts{};
    int m = 0;
    for (const auto& row : matrix.ratings) {
      if (row[item]) {
        ++counts[static_cast<std::size_t>(*row[item])];
        ++m;
      }
    }
    if (m < 2) continue;
    pairable = true;
    for (std::size_t c = 0; c < K; ++c) {
      for (std::size_t k = 0; k < K; ++k) {
        const double pairs = c == k ? static_cast<double>(counts[c]) * (counts[c] - 1)
                                    : static_cast<double>(counts[c]) * counts[k];
        coincidence[c][k] += pairs / (m - 1);
      }
    }
  }
  if (!pairable) {
    throw Error(ErrorKind::InsufficientData, "no item has two or more ratings");
  }

  std::array<double, K> marginal{};
  for (std::size_t c = 0; c < K; ++c) {
    marginal[c] = std::accumulate(coincidence[c].begin(), coincidence[c].end(), 0.0);
  }
  const double n = std::accumulate(marginal.begin(), marginal.end(), 0.0);

  // ordinal metric: (sum_{g=c..k} n_g - (n_c + n_k) / 2)^2
  const auto delta2 = [&](std::size_t c, std::size_t k) {
    if (c == k) return 0.0;
    const auto [lo, hi] = std::minmax(c, k);
    double span = 0.0;
    for (std::size_t g = lo; g <= hi; ++g) span += marginal[g];
    const double d = span - (marginal[lo] + marginal[hi]) / 2.0;
    return d * d;
  };

  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t c = 0; c < K; ++c) {
    for (std::size_t k = 0; k < K; ++k) {
      const double d = delta2(c, k);
      observed += coincidence[c][k] * d;
      expected += marginal[c] * marginal[k] * d;
    }
  }
  if (expected == 0.0) {
    throw Error(ErrorKind::DegenerateData, "alpha undefined: all pairable values are identical");
  }
  return 1.0 - (n - 1.0) * observed / expected;
}

PairwiseAgreement pairwise_agreement(const RatingMatrix& matrix) {
  matrix.validate();
  double total = 0.0;
  double exact = 0.0;
  double within = 0.0;
  PairwiseAgreement out;
  for (std::size_t item = 0; item < matrix.items.size(); ++item) {
    std::vector<int> values;
    for (const auto& row : matrix.ratings) {
      if (row[item]) values.push_back(*row[item]);
    }
    if (values.size() < 2) continue;
    ++out.pairable_items;
    const double w = 1.0 / static_cast<double>(values.size() - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (i == j) continue;
        total += w;
        const int d = std::abs(values[i] - values[j]);
        exact += d == 0 ? w : 0.0;
        within += d <= 1 ? w : 0.0;
      }
    }
  }
  if (out.pairable_items == 0) {
    throw Error(ErrorKind::InsufficientData, "no item has two or more ratings");
  }
  out.exact = exact / total;
  out.within_one = within / total;
  return out;
}

AgreementReport agreement_report(std::span<const int> human, std::span<const int> ai) {
  check_pair(human, ai, 2);
  check_levels(human);
  check_levels(ai);
  AgreementReport r;
  r.n = static_cast<int>(human.size());
  const double n = static_cast<double>(human.size());
  double exact = 0, within = 0, abs_sum = 0, signed_sum = 0;
  for (std::size_t i = 0; i < human.size(); ++i) {
    const int d = ai[i] - human[i];
    exact += d == 0 ? 1 : 0;
    within += std::abs(d) <= 1 ? 1 : 0;
    abs_sum += std::abs(d);
    signed_sum += d;
  }
  r.exact_match = exact / n;
  r.within_one = within / n;
  r.mae = abs_sum / n;
  r.bias = signed_sum / n;

  try {
    r.qwk = quadratic_weighted_kappa(human, ai);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateRatings) throw;
    r.flags.emplace_back("qwk_undefined");
  }

  const double mean_h = std::accumulate(human.begin(), human.end(), 0.0) / n;
  const double mean_a = std::accumulate(ai.begin(), ai.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < human.size(); ++i) {
    const double dx = human[i] - mean_h;
    const double dy = ai[i] - mean_a;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    r.flags.emplace_back("pearson_undefined");
  } else {
    r.pearson = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  }
  return r;
}

double cohens_kappa_nominal(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::LengthMismatch, "label vectors differ in length");
  }
  if (a.empty()) throw Error(ErrorKind::LengthMismatch, "label vectors are empty");
  std::map<std::string, double> count_a;
  std::map<std::string, double> count_b;
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    count_a[a[i]] += 1;
    count_b[b[i]] += 1;
    agree += a[i] == b[i] ? 1 : 0;
  }
  const double n = static_cast<double>(a.size());
  const double p_o = agree / n;
  double p_e = 0;
  for (const auto& [label, ca] : count_a) {
    const auto it = count_b.find(label);
    if (it != count_b.end()) p_e += (ca / n) * (it->second / n);
  }
  if (p_e >= 1.0) {
    throw Error(ErrorKind::DegenerateLabels, "kappa undefined: both raters use one identical label");
  }
  return (p_o - p_e) / (1.0 - p_e);
}

LevelRecallReport level_recall_report(std::span<const int> human, std::span<const int> ai) {
  check_pair(human, ai, 0);
  check_levels(human);
  check_levels(ai);
  LevelRecallReport r;
  r.n = static_cast<int>(human.size());
  for (int level = 0; level < RubricLevel::kCount; ++level) {
    r.levels[static_cast<std::size_t>(level)].level = level;
  }
  for (std::size_t i = 0; i < human.size(); ++i) {
    auto& h = r.levels[static_cast<std::size_t>(human[i])];
    auto& p = r.levels[static_cast<std::size_t>(ai[i])];
    ++h.human_count;
    ++p.predicted_count;
    if (human[i] == ai[i]) ++h.true_positives;
    const int d = std::abs(human[i] - ai[i]);
    auto& bucket = d == 0 ? r.exact : d == 1 ? r.off_by_one : r.off_by_two_plus;
    ++bucket.count;
  }
  for (auto& l : r.levels) {
    l.misses = l.human_count - l.true_positives;
    l.false_positives = l.predicted_count - l.true_positives;
    if (l.human_count > 0) {
      l.recall = static_cast<double>(l.true_positives) / l.human_count;
    }
  }
  if (r.n > 0) {
    for (auto* bucket : {&r.exact, &r.off_by_one, &r.off_by_two_plus}) {
      bucket->fraction = static_cast<double>(bucket->count) / r.n;
    }
  }
  return r;
}

RubricLevel consensus_score(RubricLevel a, RubricLevel b) {
  return RubricLevel{(a.value() + b.value() + 1) / 2};
}

ImprovementDecomposition improvement_decomposition(double qwk_uncalibrated,
                                                   double qwk_calibrated_base,
                                                   double qwk_calibrated_best) {
  ImprovementDecomposition d;
  d.prompt_delta = round12(qwk_calibrated_base - qwk_uncalibrated);
  d.model_delta = round12(qwk_calibrated_best - qwk_calibrated_base);
  d.total_delta = round12(d.prompt_delta + d.model_delta);
  if (d.total_delta == 0.0) {
    throw Error(ErrorKind::ZeroTotal, "total QWK change is zero; shares undefined");
  }
  d.prompt_share = d.prompt_delta / d.total_delta;
  d.model_share = d.model_delta / d.total_delta;
  d.prompt_share_percent = static_cast<int>(std::lround(d.prompt_share * 100.0));
  d.model_share_percent = static_cast<int>(std::lround(d.model_share * 100.0));
  return d;
}

}  // namespace arguagent::metrics
