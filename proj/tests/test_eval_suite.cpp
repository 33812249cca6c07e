#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "chainscore/error.hpp"
#include "chainscore/eval.hpp"
#include "chainscore/tokenizer.hpp"
#include "chainscore/util.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chainscore;

TEST_CASE("perfect predictions score zero error") {
  NumericCodec codec = NumericCodec::fit_linear("m", 0.0, 4.0, 4);
  PairedSeries s{{0.5, 1.5, 3.0}, {0.5, 1.5, 3.0}};
  RegressionScores r = regression_scores(s, codec);
  CHECK(r.mse == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.mae == 0.0);
  CHECK(r.bmae == 0.0);
}

TEST_CASE("the worked regression example") {
  // truth [0,0,2], pred [1,0,2]: mse = mae = 1/3; two occupied truth bins with
  // per-bin MAE 0.5 and 0 give bmae 0.25
  NumericCodec codec = NumericCodec::fit_linear("m", 0.0, 2.0, 2);
  PairedSeries s{{0.0, 0.0, 2.0}, {1.0, 0.0, 2.0}};
  RegressionScores r = regression_scores(s, codec);
  CHECK(r.mse == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.mae == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.bmae == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.rmse == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("rmse is the square root of mse on random series") {
  NumericCodec codec = NumericCodec::fit_linear("m", -10.0, 10.0, 16);
  Rng rng(5);
  for (int it = 0; it < 1000; ++it) {
    size_t n = 1 + rng.next_below(12);
    PairedSeries s;
    for (size_t i = 0; i < n; ++i) {
      s.truth.push_back(rng.next_double() * 16.0 - 8.0);
      s.pred.push_back(rng.next_double() * 16.0 - 8.0);
    }
    RegressionScores r = regression_scores(s, codec);
    CHECK(r.rmse == doctest::Approx(std::sqrt(r.mse)).epsilon(1e-12));
  }
}

TEST_CASE("series validation") {
  NumericCodec codec = NumericCodec::fit_linear("m", 0.0, 1.0, 2);
  CHECK_THROWS_AS(regression_scores(PairedSeries{{}, {}}, codec), Error);
  CHECK_THROWS_AS(regression_scores(PairedSeries{{1.0}, {1.0, 2.0}}, codec), Error);
}

TEST_CASE("rank scores on the worked examples") {
  PairedSeries doubled{{1.0, 2.0, 3.0, 5.0}, {2.0, 4.0, 6.0, 10.0}};
  RankScores r1 = rank_scores(doubled);
  CHECK(*r1.lcc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*r1.srcc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*r1.ktau == doctest::Approx(1.0).epsilon(1e-12));

  PairedSeries swapped{{1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 4.0, 3.0}};
  RankScores r2 = rank_scores(swapped);
  CHECK(*r2.ktau == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(*r2.srcc == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(*r2.lcc == doctest::Approx(0.8).epsilon(1e-12));

  PairedSeries reversed{{1.0, 2.0, 3.0}, {-1.0, -2.0, -3.0}};
  RankScores r3 = rank_scores(reversed);
  CHECK(*r3.lcc == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(*r3.srcc == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(*r3.ktau == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("zero-variance series report undefined correlations") {
  PairedSeries flat{{2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}};
  RankScores r = rank_scores(flat);
  CHECK(!r.lcc.has_value());
  CHECK(!r.srcc.has_value());
  CHECK(!r.ktau.has_value());
}

TEST_CASE("tau-b and srcc match brute-force oracles on tied random series") {
  Rng rng(99);
  for (int it = 0; it < 1000; ++it) {
    size_t n = 2 + rng.next_below(7);  // length <= 8
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = double(rng.next_below(4));  // few levels force ties
      y[i] = double(rng.next_below(4));
    }
    auto tau = kendall_tau_b(x, y);
    auto tau_ref = oracles::tau_b(x, y);
    REQUIRE(tau.has_value() == tau_ref.has_value());
    if (tau) CHECK(*tau == *tau_ref);

    auto ranks_impl = average_ranks(x);
    auto ranks_ref = oracles::fractional_ranks(x);
    REQUIRE(ranks_impl.size() == ranks_ref.size());
    for (size_t i = 0; i < n; ++i) CHECK(ranks_impl[i] == ranks_ref[i]);

    auto srcc = rank_scores(PairedSeries{x, y}).srcc;
    auto srcc_ref = oracles::pearson(oracles::fractional_ranks(x), oracles::fractional_ranks(y));
    REQUIRE(srcc.has_value() == srcc_ref.has_value());
    if (srcc) CHECK(*srcc == doctest::Approx(*srcc_ref).epsilon(1e-14));
  }
}

TEST_CASE("classification on the worked example") {
  PairedLabels s{{"A", "A", "B", "B"}, {"A", "B", "B", "B"}};
  ClassificationScores c = classification_scores(s, {"A", "B"});
  CHECK(c.accuracy == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(c.macro_precision == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(c.macro_recall == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(c.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0).epsilon(1e-12));

  PairedLabels perfect{{"A", "B"}, {"A", "B"}};
  ClassificationScores p = classification_scores(perfect, {"A", "B"});
  CHECK(p.accuracy == 1.0);
  CHECK(p.macro_precision == 1.0);
  CHECK(p.macro_recall == 1.0);
  CHECK(p.macro_f1 == 1.0);
}

TEST_CASE("never-true predicted classes count a zero precision") {
  // C never occurs in truth but is predicted once: P_C = 0 enters the macro
  PairedLabels s{{"A", "A", "B"}, {"A", "C", "B"}};
  ClassificationScores c = classification_scores(s, {"A", "B", "C"});
  CHECK(c.macro_precision == doctest::Approx((1.0 + 1.0 + 0.0) / 3.0).epsilon(1e-12));
  CHECK(c.macro_recall == doctest::Approx((0.5 + 1.0 + 0.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("aggregation averages per-kind and counts exclusions") {
  MetricReport a;
  a.metric = "m1";
  a.is_numerical = true;
  a.n = 10;
  a.regression = {2.0, std::sqrt(2.0), 1.0, 0.5};
  a.rank = {0.9, 0.8, 0.7};

  MetricReport b = a;
  b.metric = "m2";
  b.regression = {4.0, 2.0, 2.0, 1.5};
  b.rank = {std::nullopt, std::nullopt, std::nullopt};  // zero variance

  MetricReport c;
  c.metric = "gender";
  c.is_numerical = false;
  c.n = 10;
  c.classification = {0.75, 5.0 / 6.0, 0.75, 0.7333333333333334};

  ScoreReport report = aggregate({a, b, c});
  CHECK(report.numerical_count == 2);
  CHECK(report.macro_regression.mse == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(report.rank_defined == 1);
  CHECK(report.rank_excluded == 1);
  CHECK(report.macro_lcc == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(report.categorical_count == 1);
  CHECK(report.macro_classification.accuracy == doctest::Approx(0.75).epsilon(1e-12));

  ScoreReport solo = aggregate({a});
  CHECK(solo.macro_regression.mse == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(aggregate({}), Error);

  std::string text = report_to_text(report);
  CHECK(text.find("m1") != std::string::npos);
  CHECK(text.find("MSE") != std::string::npos);
  std::string json = report_to_json(report);
  CHECK(json.find("\"mse\"") != std::string::npos);
}

TEST_CASE("rank correlations are invariant to increasing affine maps, mse is not") {
  Rng rng(31);
  std::vector<double> x(20), y(20), y2(20);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.next_normal();
    y[i] = rng.next_normal();
    y2[i] = 3.0 * y[i] + 2.0;
  }
  RankScores r = rank_scores(PairedSeries{x, y});
  RankScores r2 = rank_scores(PairedSeries{x, y2});
  CHECK(*r.lcc == doctest::Approx(*r2.lcc).epsilon(1e-12));
  CHECK(*r.srcc == doctest::Approx(*r2.srcc).epsilon(1e-12));
  CHECK(*r.ktau == doctest::Approx(*r2.ktau).epsilon(1e-12));

  NumericCodec codec = NumericCodec::fit_linear("m", -10.0, 10.0, 8);
  CHECK(regression_scores(PairedSeries{x, y}, codec).mse !=
        regression_scores(PairedSeries{x, y2}, codec).mse);
}

TEST_CASE("scores are permutation-invariant") {
  NumericCodec codec = NumericCodec::fit_linear("m", -10.0, 10.0, 8);
  Rng rng(8);
  std::vector<double> x(12), y(12);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.next_normal();
    y[i] = rng.next_normal();
  }
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  Rng shuffler(55);
  shuffler.shuffle(perm);
  std::vector<double> xp(12), yp(12);
  for (size_t i = 0; i < perm.size(); ++i) {
    xp[i] = x[perm[i]];
    yp[i] = y[perm[i]];
  }
  RegressionScores r1 = regression_scores(PairedSeries{x, y}, codec);
  RegressionScores r2 = regression_scores(PairedSeries{xp, yp}, codec);
  CHECK(r1.mse == doctest::Approx(r2.mse).epsilon(1e-12));
  CHECK(r1.mae == doctest::Approx(r2.mae).epsilon(1e-12));
  CHECK(r1.bmae == doctest::Approx(r2.bmae).epsilon(1e-12));
  RankScores k1 = rank_scores(PairedSeries{x, y});
  RankScores k2 = rank_scores(PairedSeries{xp, yp});
  CHECK(*k1.ktau == doctest::Approx(*k2.ktau).epsilon(1e-12));
  CHECK(*k1.srcc == doctest::Approx(*k2.srcc).epsilon(1e-12));
}
