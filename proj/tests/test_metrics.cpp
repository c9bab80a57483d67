// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"

#include "arguagent/metrics.hpp"
#include "oracles.hpp"

using namespace arguagent;
using namespace arguagent::metrics;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an arguagent::Error");
  return ErrorKind::InvalidArgument;
}

std::vector<int> random_levels(Rng& rng, std::size_t n) {
  std::vector<int> v(n);
  for (auto& x : v) x = static_cast<int>(rng.below(5));
  return v;
}

}  // namespace

TEST_CASE("qwk examples") {
  const std::vector<int> same{0, 1, 2, 3, 4};
  CHECK(quadratic_weighted_kappa(same, same) == 1.0);

  const std::vector<int> a{0, 2, 4, 2, 1};
  const std::vector<int> b{1, 2, 3, 2, 0};
  CHECK(std::abs(quadratic_weighted_kappa(a, b) - oracle::qwk(a, b)) < 1e-12);

  const std::vector<int> flat{2, 2, 2};
  CHECK(kind_of([&] { quadratic_weighted_kappa(flat, flat); }) == ErrorKind::DegenerateRatings);
  CHECK(kind_of([&] { quadratic_weighted_kappa(a, flat); }) == ErrorKind::LengthMismatch);
  const std::vector<int> out{0, 5};
  const std::vector<int> in{0, 1};
  CHECK(kind_of([&] { quadratic_weighted_kappa(out, in); }) == ErrorKind::InvalidLevel);
}

TEST_CASE("qwk matches the pairwise closed form") {
  // sum w*O and sum w*E rewritten as sums over item pairs; a second route
  // to the same quantity that shares nothing with the matrix construction
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_levels(rng, 2 + rng.below(30));
    auto b = random_levels(rng, a.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      num += (a[i] - b[i]) * (a[i] - b[i]);
      for (std::size_t j = 0; j < b.size(); ++j) den += (a[i] - b[j]) * (a[i] - b[j]);
    }
    if (den == 0.0) continue;
    const double expected = 1.0 - num / (den / static_cast<double>(a.size()));
    CHECK(std::abs(quadratic_weighted_kappa(a, b) - expected) < 1e-12);
  }
}

TEST_CASE("qwk is symmetric and invariant under item permutation") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    auto a = random_levels(rng, 2 + rng.below(40));
    auto b = random_levels(rng, a.size());
    double ab = 0.0;
    try {
      ab = quadratic_weighted_kappa(a, b);
    } catch (const Error&) {
      continue;
    }
    CHECK(ab == doctest::Approx(quadratic_weighted_kappa(b, a)).epsilon(1e-12));
    CHECK(ab <= 1.0);
    CHECK(ab >= -1.0);
    std::vector<std::size_t> order(a.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span(order));
    std::vector<int> pa;
    std::vector<int> pb;
    for (auto i : order) {
      pa.push_back(a[i]);
      pb.push_back(b[i]);
    }
    CHECK(quadratic_weighted_kappa(pa, pb) == doctest::Approx(ab).epsilon(1e-12));
  }
}

TEST_CASE("krippendorff alpha") {
  SUBCASE("perfect agreement") {
    RatingMatrix m;
    m.coders = {"a", "b", "c", "d"};
    for (int i = 0; i < 10; ++i) m.items.push_back("i" + std::to_string(i));
    m.ratings.assign(4, std::vector<std::optional<int>>(10));
    for (int i = 0; i < 10; ++i) {
      for (int c = 0; c < 4; ++c) m.ratings[c][i] = i % 5;
    }
    CHECK(krippendorff_alpha_ordinal(m) == 1.0);
  }
  SUBCASE("matches the pair-enumeration oracle with missing cells") {
    Rng rng(2024);
    for (int t = 0; t < 100; ++t) {
      const auto m = oracle::random_matrix(rng, 4, 10 + static_cast<int>(rng.below(30)), 0.3);
      double got = 0.0;
      try {
        got = krippendorff_alpha_ordinal(m);
      } catch (const Error&) {
        continue;
      }
      CHECK(std::abs(got - oracle::alpha_ordinal(m)) < 1e-9);
      CHECK(got <= 1.0);
    }
  }
  SUBCASE("single coder per item") {
    RatingMatrix m{{"a", "b"}, {"i", "j"}, {{1, std::nullopt}, {std::nullopt, 2}}};
    CHECK(kind_of([&] { krippendorff_alpha_ordinal(m); }) == ErrorKind::InsufficientData);
  }
  SUBCASE("a coder with no ratings changes nothing") {
    Rng rng(8);
    auto m = oracle::random_matrix(rng, 3, 15, 0.1);
    const double base = krippendorff_alpha_ordinal(m);
    m.coders.push_back("silent");
    m.ratings.emplace_back(m.items.size());
    CHECK(krippendorff_alpha_ordinal(m) == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("constant values") {
    RatingMatrix m{{"a", "b"}, {"i", "j"}, {{2, 2}, {2, 2}}};
    CHECK(kind_of([&] { krippendorff_alpha_ordinal(m); }) == ErrorKind::DegenerateData);
  }
  SUBCASE("matrix validation") {
    RatingMatrix m{{"a"}, {"i"}, {{1}}};
    CHECK(kind_of([&] { m.validate(); }) == ErrorKind::InvalidMatrix);
    RatingMatrix bad{{"a", "b"}, {"i"}, {{7}, {1}}};
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::InvalidMatrix);
    RatingMatrix unrated{{"a", "b"}, {"i"}, {{std::nullopt}, {std::nullopt}}};
    CHECK(kind_of([&] { unrated.validate(); }) == ErrorKind::InvalidMatrix);
  }
}

TEST_CASE("matrix from triples") {
  const std::vector<RatingTriple> triples{{"i1", "a", 1}, {"i1", "b", 2}, {"i2", "b", 3}};
  const auto m = matrix_from_triples(triples);
  CHECK(m.coders == std::vector<std::string>{"a", "b"});
  CHECK(m.items == std::vector<std::string>{"i1", "i2"});
  CHECK(m.ratings[0][1] == std::nullopt);
  CHECK(m.ratings[1][1] == 3);
  const std::vector<RatingTriple> repeated{{"i1", "a", 1}, {"i1", "a", 2}};
  CHECK_THROWS_AS(matrix_from_triples(repeated), Error);
}

TEST_CASE("pairwise agreement") {
  RatingMatrix m{{"a", "b", "c"}, {"i", "j"}, {{1, 0}, {1, 2}, {2, std::nullopt}}};
  const auto p = pairwise_agreement(m);
  // item i holds 6 ordered pairs at weight 1/2 (2 exact, all within one);
  // item j holds 2 at weight 1 (neither): exact 1/5, within one 3/5
  CHECK(p.pairable_items == 2);
  CHECK(p.exact == doctest::Approx(0.2));
  CHECK(p.within_one == doctest::Approx(0.6));
}

TEST_CASE("agreement report") {
  const std::vector<int> h{1, 2, 3};
  const std::vector<int> a{2, 3, 4};
  const auto r = agreement_report(h, a);
  CHECK(r.exact_match == 0.0);
  CHECK(r.within_one == 1.0);
  CHECK(r.mae == 1.0);
  CHECK(r.bias == 1.0);
  CHECK(r.n == 3);

  const auto same = agreement_report(h, h);
  CHECK(same.exact_match == 1.0);
  CHECK(same.mae == 0.0);
  CHECK(same.bias == 0.0);
  CHECK(same.pearson == doctest::Approx(1.0));
  CHECK(same.qwk == 1.0);

  const std::vector<int> x{0, 4};
  const std::vector<int> y{4, 0};
  const auto anti = agreement_report(x, y);
  CHECK(anti.exact_match == 0.0);
  CHECK(anti.within_one == 0.0);
  CHECK(anti.mae == 4.0);
  CHECK(anti.bias == 0.0);

  const std::vector<int> flat{2, 2};
  const auto undefined = agreement_report(flat, flat);
  CHECK_FALSE(undefined.qwk.has_value());
  CHECK_FALSE(undefined.pearson.has_value());
  CHECK(undefined.flags.size() == 2);

  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto p = random_levels(rng, 2 + rng.below(20));
    const auto q = random_levels(rng, p.size());
    const auto rep = agreement_report(p, q);
    CHECK(rep.exact_match <= rep.within_one);
    CHECK(std::abs(rep.bias) <= rep.mae + 1e-12);
  }
}

TEST_CASE("cohen's kappa") {
  const std::vector<std::string> labels{"ALL", "SOME_NO", "UNSURE", "ALL"};
  CHECK(cohens_kappa_nominal(labels, labels) == 1.0);

  const std::vector<std::string> a{"ALL", "ALL", "SOME_NO", "UNSURE"};
  const std::vector<std::string> b{"ALL", "SOME_NO", "SOME_NO", "UNSURE"};
  CHECK(std::abs(cohens_kappa_nominal(a, b) - oracle::kappa(a, b)) < 1e-12);
  // p_o = 3/4, p_e = (2*1 + 1*2 + 1*1)/16 = 5/16
  CHECK(cohens_kappa_nominal(a, b) == doctest::Approx((0.75 - 5.0 / 16) / (1 - 5.0 / 16)));

  const std::vector<std::string> constant{"ALL", "ALL"};
  CHECK(kind_of([&] { cohens_kappa_nominal(constant, constant); }) == ErrorKind::DegenerateLabels);
  CHECK(kind_of([&] { cohens_kappa_nominal(a, constant); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("level recall") {
  SUBCASE("22 fours with 14 coinciding") {
    std::vector<int> human;
    std::vector<int> ai;
    for (int i = 0; i < 14; ++i) {
      human.push_back(4);
      ai.push_back(4);
    }
    for (int i = 0; i < 8; ++i) {
      human.push_back(4);
      ai.push_back(3);
    }
    for (int i = 0; i < 8; ++i) {
      human.push_back(3);
      ai.push_back(4);
    }
    const auto r = level_recall_report(human, ai);
    const auto& four = r.levels[4];
    CHECK(four.human_count == 22);
    CHECK(four.predicted_count == 22);
    CHECK(four.true_positives == 14);
    CHECK(*four.recall == doctest::Approx(14.0 / 22));
    CHECK(four.misses == 8);
    CHECK(four.false_positives == 8);
    CHECK(r.off_by_one.count == 16);
    CHECK(r.exact.count == 14);
  }
  SUBCASE("identity") {
    const std::vector<int> v{0, 1, 2, 3, 4, 4};
    const auto r = level_recall_report(v, v);
    for (const auto& l : r.levels) {
      CHECK(l.recall == 1.0);
      CHECK(l.false_positives == 0);
    }
  }
  SUBCASE("all twos scored as threes") {
    const std::vector<int> h(6, 2);
    const std::vector<int> a(6, 3);
    const auto r = level_recall_report(h, a);
    CHECK(r.levels[2].recall == 0.0);
    CHECK(r.levels[3].false_positives == 6);
    CHECK_FALSE(r.levels[3].recall.has_value());
    CHECK(r.off_by_one.fraction == 1.0);
  }
  const std::vector<int> one{1};
  const std::vector<int> two{1, 2};
  CHECK(kind_of([&] { level_recall_report(one, two); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("consensus rounds halves up") {
  CHECK(consensus_score(RubricLevel{2}, RubricLevel{2}).value() == 2);
  CHECK(consensus_score(RubricLevel{0}, RubricLevel{4}).value() == 2);
  CHECK(consensus_score(RubricLevel{1}, RubricLevel{2}).value() == 2);
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; b <= 4; ++b) {
      const double mean = (a + b) / 2.0;
      CHECK(consensus_score(RubricLevel{a}, RubricLevel{b}).value() == static_cast<int>(std::floor(mean + 0.5)));
    }
  }
}

TEST_CASE("improvement decomposition") {
  const auto d = improvement_decomposition(0.531, 0.686, 0.708);
  CHECK(d.prompt_delta == 0.155);
  CHECK(d.model_delta == 0.022);
  CHECK(std::abs(d.prompt_share * 100 - 87.6) <= 0.1);
  CHECK(std::abs(d.model_share * 100 - 12.4) <= 0.1);
  CHECK(d.prompt_share_percent == 88);
  CHECK(d.model_share_percent == 12);

  const auto one_sided = improvement_decomposition(0.5, 0.5, 0.7);
  CHECK(one_sided.prompt_share == 0.0);
  CHECK(one_sided.model_share == 1.0);
  CHECK(kind_of([] { improvement_decomposition(0.5, 0.5, 0.5); }) == ErrorKind::ZeroTotal);
}
