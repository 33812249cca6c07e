#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chainscore/tokenizer.hpp"

namespace chainscore {

// Aligned truth/prediction series for one metric.
struct PairedSeries {
  std::vector<double> truth;
  std::vector<double> pred;
};

struct PairedLabels {
  std::vector<std::string> truth;
  std::vector<std::string> pred;
};

struct RegressionScores {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double bmae = 0.0;  // mean over occupied truth bins of per-bin MAE
};

// Correlations are undefined (excluded from macros, with a count) when either
// series has zero variance.
struct RankScores {
  std::optional<double> lcc;   // Pearson
  std::optional<double> srcc;  // Pearson over tie-averaged ranks
  std::optional<double> ktau;  // Kendall tau-b
};

struct ClassificationScores {
  double accuracy = 0.0;
  double macro_precision = 0.0;  // undefined per-class ratios enter as 0
  double macro_recall = 0.0;
  double macro_f1 = 0.0;  // mean of per-class F1
};

// Truth bins for BMAE come from the metric's fitted codec.
RegressionScores regression_scores(const PairedSeries& series, const NumericCodec& codec);
RankScores rank_scores(const PairedSeries& series);
ClassificationScores classification_scores(const PairedLabels& labels,
                                           const std::vector<std::string>& classes);

// Tie-averaged (fractional) ranks.
std::vector<double> average_ranks(const std::vector<double>& values);
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);
std::optional<double> kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

struct MetricReport {
  std::string metric;
  bool is_numerical = true;
  int n = 0;
  RegressionScores regression;
  RankScores rank;
  ClassificationScores classification;
};

struct ScoreReport {
  std::vector<MetricReport> metrics;  // canonical order

  int numerical_count = 0;
  RegressionScores macro_regression;
  double macro_lcc = 0.0, macro_srcc = 0.0, macro_ktau = 0.0;
  int rank_defined = 0;
  int rank_excluded = 0;  // zero-variance exclusions

  int categorical_count = 0;
  ClassificationScores macro_classification;
};

ScoreReport aggregate(const std::vector<MetricReport>& per_metric);

std::string report_to_json(const ScoreReport& report);
std::string report_to_text(const ScoreReport& report);  // aligned plain-text table

}  // namespace chainscore
