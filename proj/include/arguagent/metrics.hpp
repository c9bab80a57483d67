// SPDX-License-Identifier: Apache-2.0
//
// Agreement statistics between human coders and the automated scorer.
// All values are plain double-precision computations over small inputs.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arguagent/domain.hpp"

namespace arguagent::metrics {

/// Coder x item grid of optional 0-4 ratings.
struct RatingMatrix {
  std::vector<std::string> coders;
  std::vector<std::string> items;
  /// ratings[coder][item]; std::nullopt when the coder did not rate the item.
  std::vector<std::vector<std::optional<int>>> ratings;

  /// Throws Error(InvalidMatrix) on shape problems, fewer than two coders, no
  /// items, an item nobody rated, or values outside [0, 4].
  void validate() const;

  friend bool operator==(const RatingMatrix&, const RatingMatrix&) = default;
};

/// Builds a matrix from (item, coder, score) triples, keeping first-seen
/// order for coders and items. A repeated (item, coder) pair is an error.
struct RatingTriple {
  std::string item;
  std::string coder;
  int score = 0;
};
RatingMatrix matrix_from_triples(std::span<const RatingTriple> triples);

/// Quadratic weighted kappa with k ordinal categories 0..k-1.
/// Throws LengthMismatch (unequal or < 2 items), InvalidLevel (value outside
/// range) or DegenerateRatings (zero expected disagreement).
double quadratic_weighted_kappa(std::span<const int> a, std::span<const int> b, int k = 5);

/// Krippendorff's alpha with the ordinal difference function. Items with
/// fewer than two ratings are not pairable and are skipped.
/// Throws InsufficientData (nothing pairable) or DegenerateData (D_e = 0).
double krippendorff_alpha_ordinal(const RatingMatrix& matrix);

/// Fraction of pairable within-item rating pairs that agree exactly and
/// within one level. Each item's pairs are weighted by 1 / (m_u - 1), the
/// same weighting the coincidence matrix uses.
struct PairwiseAgreement {
  double exact = 0;
  double within_one = 0;
  int pairable_items = 0;
};
PairwiseAgreement pairwise_agreement(const RatingMatrix& matrix);

struct AgreementReport {
  std::optional<double> qwk;  // absent when chance disagreement is zero
  double exact_match = 0;
  double within_one = 0;
  double mae = 0;
  double bias = 0;  // mean(ai - human)
  std::optional<double> pearson;  // absent when either vector has zero variance
  int n = 0;
  std::vector<std::string> flags;  // "qwk_undefined", "pearson_undefined"
};

AgreementReport agreement_report(std::span<const int> human, std::span<const int> ai);

/// Unweighted Cohen's kappa over string labels.
/// Throws LengthMismatch or DegenerateLabels (p_e == 1).
double cohens_kappa_nominal(std::span<const std::string> a, std::span<const std::string> b);

struct LevelRecall {
  int level = 0;
  int human_count = 0;
  int predicted_count = 0;
  int true_positives = 0;
  std::optional<double> recall;  // absent when human_count == 0
  int misses = 0;                // human_count - true_positives
  int false_positives = 0;       // predicted_count - true_positives
};

struct DisagreementBucket {
  int count = 0;
  double fraction = 0;
};

struct LevelRecallReport {
  std::array<LevelRecall, RubricLevel::kCount> levels{};
  int n = 0;
  DisagreementBucket exact;
  DisagreementBucket off_by_one;
  DisagreementBucket off_by_two_plus;
};

LevelRecallReport level_recall_report(std::span<const int> human, std::span<const int> ai);

/// Mean of two coder scores, halves rounded up.
RubricLevel consensus_score(RubricLevel a, RubricLevel b);

struct ImprovementDecomposition {
  double prompt_delta = 0;
  double model_delta = 0;
  double total_delta = 0;
  double prompt_share = 0;  // raw fraction of total
  double model_share = 0;
  int prompt_share_percent = 0;  // display rounding, whole percent
  int model_share_percent = 0;
};

/// Splits a QWK improvement into prompt-calibration and model-upgrade parts.
/// Deltas are rounded to 12 decimal places so that binary representation
/// noise (0.686 - 0.531 = 0.15500000000000003) does not leak into reports.
/// Throws ZeroTotal when the total delta is zero.
ImprovementDecomposition improvement_decomposition(double qwk_uncalibrated,
                                                   double qwk_calibrated_base,
                                                   double qwk_calibrated_best);

}  // namespace arguagent::metrics
