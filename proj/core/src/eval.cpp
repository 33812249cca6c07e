#include "chainscore/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "json.hpp"

#include "chainscore/error.hpp"

namespace chainscore {

using nlohmann::json;

namespace {

void validate_lengths(size_t truth, size_t pred) {
  if (truth == 0) fail(Errc::EmptySeries, "cannot score an empty series");
  if (truth != pred) fail(Errc::LengthMismatch, "truth and prediction lengths differ");
}

}  // namespace

RegressionScores regression_scores(const PairedSeries& series, const NumericCodec& codec) {
  validate_lengths(series.truth.size(), series.pred.size());
  const size_t n = series.truth.size();
  RegressionScores scores;
  std::map<int, std::pair<double, int>> bins;  // truth bin -> (abs error sum, count)
  for (size_t i = 0; i < n; ++i) {
    double err = series.truth[i] - series.pred[i];
    scores.mse += err * err;
    scores.mae += std::abs(err);
    auto& bin = bins[codec.encode(series.truth[i])];
    bin.first += std::abs(err);
    bin.second += 1;
  }
  scores.mse /= double(n);
  scores.mae /= double(n);
  scores.rmse = std::sqrt(scores.mse);
  for (const auto& [bin, acc] : bins) scores.bmae += acc.first / double(acc.second);
  scores.bmae /= double(bins.size());
  return scores;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  const size_t n = values.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    double avg = (double(i) + double(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(Errc::LengthMismatch, "paired series lengths differ");
  const size_t n = x.size();
  if (n == 0) fail(Errc::EmptySeries, "cannot correlate empty series");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(Errc::LengthMismatch, "paired series lengths differ");
  const size_t n = x.size();
  if (n == 0) fail(Errc::EmptySeries, "cannot correlate empty series");
  long long concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        tie_x++;
        continue;
      }
      if (dy == 0) {
        tie_y++;
        continue;
      }
      if ((dx > 0) == (dy > 0))
        concordant++;
      else
        discordant++;
    }
  }
  double nx = double(concordant + discordant + tie_x);
  double ny = double(concordant + discordant + tie_y);
  if (nx == 0 || ny == 0) return std::nullopt;
  return double(concordant - discordant) / std::sqrt(nx * ny);
}

RankScores rank_scores(const PairedSeries& series) {
  validate_lengths(series.truth.size(), series.pred.size());
  RankScores scores;
  scores.lcc = pearson(series.truth, series.pred);
  scores.srcc = pearson(average_ranks(series.truth), average_ranks(series.pred));
  scores.ktau = kendall_tau_b(series.truth, series.pred);
  return scores;
}

ClassificationScores classification_scores(const PairedLabels& labels,
                                           const std::vector<std::string>& classes) {
  validate_lengths(labels.truth.size(), labels.pred.size());
  if (classes.empty()) fail(Errc::EmptyInput, "classification needs a class list");
  const size_t n = labels.truth.size();
  std::map<std::string, int> tp, fp, fn;
  ClassificationScores scores;
  for (size_t i = 0; i < n; ++i) {
    if (labels.truth[i] == labels.pred[i]) {
      scores.accuracy += 1.0;
      tp[labels.truth[i]] += 1;
    } else {
      fn[labels.truth[i]] += 1;
      fp[labels.pred[i]] += 1;
    }
  }
  scores.accuracy /= double(n);
  for (const std::string& cls : classes) {
    double t = tp[cls], p_denom = t + fp[cls], r_denom = t + fn[cls];
    double precision = p_denom > 0 ? t / p_denom : 0.0;
    double recall = r_denom > 0 ? t / r_denom : 0.0;
    double f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    scores.macro_precision += precision;
    scores.macro_recall += recall;
    scores.macro_f1 += f1;
  }
  scores.macro_precision /= double(classes.size());
  scores.macro_recall /= double(classes.size());
  scores.macro_f1 /= double(classes.size());
  return scores;
}

ScoreReport aggregate(const std::vector<MetricReport>& per_metric) {
  if (per_metric.empty()) fail(Errc::NothingToAggregate, "no per-metric reports to aggregate");
  ScoreReport report;
  report.metrics = per_metric;
  for (const MetricReport& m : per_metric) {
    if (m.is_numerical) {
      report.numerical_count += 1;
      report.macro_regression.mse += m.regression.mse;
      report.macro_regression.rmse += m.regression.rmse;
      report.macro_regression.mae += m.regression.mae;
      report.macro_regression.bmae += m.regression.bmae;
      if (m.rank.lcc && m.rank.srcc && m.rank.ktau) {
        report.rank_defined += 1;
        report.macro_lcc += *m.rank.lcc;
        report.macro_srcc += *m.rank.srcc;
        report.macro_ktau += *m.rank.ktau;
      } else {
        report.rank_excluded += 1;
      }
    } else {
      report.categorical_count += 1;
      report.macro_classification.accuracy += m.classification.accuracy;
      report.macro_classification.macro_precision += m.classification.macro_precision;
      report.macro_classification.macro_recall += m.classification.macro_recall;
      report.macro_classification.macro_f1 += m.classification.macro_f1;
    }
  }
  if (report.numerical_count > 0) {
    double n = double(report.numerical_count);
    report.macro_regression.mse /= n;
    report.macro_regression.rmse /= n;
    report.macro_regression.mae /= n;
    report.macro_regression.bmae /= n;
  }
  if (report.rank_defined > 0) {
    double n = double(report.rank_defined);
    report.macro_lcc /= n;
    report.macro_srcc /= n;
    report.macro_ktau /= n;
  }
  if (report.categorical_count > 0) {
    double n = double(report.categorical_count);
    report.macro_classification.accuracy /= n;
    report.macro_classification.macro_precision /= n;
    report.macro_classification.macro_recall /= n;
    report.macro_classification.macro_f1 /= n;
  }
  return report;
}

namespace {

json regression_json(const RegressionScores& s) {
  return {{"mse", s.mse}, {"rmse", s.rmse}, {"mae", s.mae}, {"bmae", s.bmae}};
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json classification_json(const ClassificationScores& s) {
  return {{"accuracy", s.accuracy},
          {"macro_precision", s.macro_precision},
          {"macro_recall", s.macro_recall},
          {"macro_f1", s.macro_f1}};
}

}  // namespace

std::string report_to_json(const ScoreReport& report) {
  json j;
  j["metrics"] = json::array();
  for (const MetricReport& m : report.metrics) {
    json row;
    row["metric"] = m.metric;
    row["is_numerical"] = m.is_numerical;
    row["n"] = m.n;
    if (m.is_numerical) {
      row["regression"] = regression_json(m.regression);
      row["rank"] = {{"lcc", optional_json(m.rank.lcc)},
                     {"srcc", optional_json(m.rank.srcc)},
                     {"ktau", optional_json(m.rank.ktau)}};
    } else {
      row["classification"] = classification_json(m.classification);
    }
    j["metrics"].push_back(std::move(row));
  }
  json agg;
  agg["numerical_count"] = report.numerical_count;
  agg["categorical_count"] = report.categorical_count;
  agg["regression"] = regression_json(report.macro_regression);
  agg["rank"] = {{"lcc", report.macro_lcc},
                 {"srcc", report.macro_srcc},
                 {"ktau", report.macro_ktau},
                 {"defined", report.rank_defined},
                 {"excluded", report.rank_excluded}};
  agg["classification"] = classification_json(report.macro_classification);
  j["aggregate"] = std::move(agg);
  return j.dump(2) + "\n";
}

std::string report_to_text(const ScoreReport& report) {
  std::string out;
  char line[256];
  auto add = [&](const char* fmt, auto... args) {
    std::snprintf(line, sizeof(line), fmt, args...);
    out += line;
    out += '\n';
  };
  bool any_numerical = false, any_categorical = false;
  for (const MetricReport& m : report.metrics) (m.is_numerical ? any_numerical : any_categorical) = true;

  if (any_numerical) {
    add("%-24s %6s %10s %10s %10s %10s %8s %8s %8s", "metric", "n", "MSE", "RMSE", "MAE",
        "BMAE", "LCC", "SRCC", "KTAU");
    for (const MetricReport& m : report.metrics) {
      if (!m.is_numerical) continue;
      auto corr = [](const std::optional<double>& v) {
        static thread_local char buf[16];
        if (v)
          std::snprintf(buf, sizeof(buf), "%8.4f", *v);
        else
          std::snprintf(buf, sizeof(buf), "%8s", "n/a");
        return buf;
      };
      std::string lcc = corr(m.rank.lcc), srcc = corr(m.rank.srcc), ktau = corr(m.rank.ktau);
      add("%-24s %6d %10.4f %10.4f %10.4f %10.4f %s %s %s", m.metric.c_str(), m.n,
          m.regression.mse, m.regression.rmse, m.regression.mae, m.regression.bmae, lcc.c_str(),
          srcc.c_str(), ktau.c_str());
    }
    add("%-24s %6s %10.4f %10.4f %10.4f %10.4f %8.4f %8.4f %8.4f", "macro (numerical)", "",
        report.macro_regression.mse, report.macro_regression.rmse, report.macro_regression.mae,
        report.macro_regression.bmae, report.macro_lcc, report.macro_srcc, report.macro_ktau);
    if (report.rank_excluded > 0)
      add("rank correlations: %d defined, %d excluded (zero variance)", report.rank_defined,
          report.rank_excluded);
  }
  if (any_categorical) {
    if (any_numerical) out += '\n';
    add("%-24s %6s %10s %10s %10s %10s", "metric", "n", "ACC", "PREC", "RECALL", "F1");
    for (const MetricReport& m : report.metrics) {
      if (m.is_numerical) continue;
      add("%-24s %6d %10.4f %10.4f %10.4f %10.4f", m.metric.c_str(), m.n,
          m.classification.accuracy, m.classification.macro_precision,
          m.classification.macro_recall, m.classification.macro_f1);
    }
    add("%-24s %6s %10.4f %10.4f %10.4f %10.4f", "macro (categorical)", "",
        report.macro_classification.accuracy, report.macro_classification.macro_precision,
        report.macro_classification.macro_recall, report.macro_classification.macro_f1);
  }
  return out;
}

}  // namespace chainscore
