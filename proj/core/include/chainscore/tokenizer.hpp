#pragma once

#include <map>
#include <string>
#include <vector>

#include "chainscore/metric_registry.hpp"

namespace chainscore {

enum class BinStrategy { Linear, Percentile };

const char* strategy_name(BinStrategy s);
BinStrategy strategy_from_name(const std::string& name);

struct BinBoundaries {
  // Interior edges, strictly increasing, strictly inside (clamp_lo, clamp_hi).
  // Bin i covers [edge[i-1], edge[i]) with the implicit outer bounds; the last
  // bin is closed at clamp_hi.
  std::vector<double> edges;
  // One centroid per bin: bin midpoints for linear codecs, per-bin training
  // means for percentile codecs (midpoint fallback for bins no sample hit).
  std::vector<double> centroids;
};

struct ReconReport {
  double rmse = 0.0;
  double mae = 0.0;
  int count = 0;
};

class NumericCodec {
 public:
  NumericCodec() = default;
  NumericCodec(std::string metric, BinStrategy strategy, int requested_bins,
               BinBoundaries boundaries, double clamp_lo, double clamp_hi);

  // Uniform-width bins over [lo, hi]. lo/hi must be finite (callers substitute
  // observed min/max for unbounded registry ranges), bins >= 2.
  static NumericCodec fit_linear(const std::string& metric, double lo, double hi, int bins);
  // Edges at empirical quantiles t/bins; duplicates collapse, so the
  // effective bin count may shrink.
  static NumericCodec fit_percentile(const std::string& metric, std::vector<double> samples,
                                     int bins);

  int encode(double value) const;     // clamps, then buckets
  double decode(int token) const;     // centroid
  int bins() const { return static_cast<int>(boundaries_.centroids.size()); }

  const std::string& metric() const { return metric_; }
  BinStrategy strategy() const { return strategy_; }
  int requested_bins() const { return requested_bins_; }
  const BinBoundaries& boundaries() const { return boundaries_; }
  double clamp_lo() const { return clamp_lo_; }
  double clamp_hi() const { return clamp_hi_; }

  std::string to_json_string() const;
  static NumericCodec from_json_string(const std::string& text);
  void save(const std::string& path) const;
  // expected_metric mismatching the stored name raises ArtifactMismatch.
  static NumericCodec load(const std::string& path, const std::string& expected_metric);

 private:
  std::string metric_;
  BinStrategy strategy_ = BinStrategy::Linear;
  int requested_bins_ = 0;
  BinBoundaries boundaries_;
  double clamp_lo_ = 0.0;
  double clamp_hi_ = 0.0;
};

class CategoricalCodec {
 public:
  CategoricalCodec() = default;
  CategoricalCodec(std::string metric, std::vector<std::string> labels);

  int encode(const std::string& label) const;  // UnknownLabel on miss
  const std::string& decode(int token) const;
  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& metric() const { return metric_; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::string metric_;
  std::vector<std::string> labels_;
  std::map<std::string, int> by_label_;
};

ReconReport reconstruction_report(const NumericCodec& codec, const std::vector<double>& values);

// Per-metric codec bundle aligned with a registry.
struct CodecSet {
  std::map<int, NumericCodec> numeric;
  std::map<int, CategoricalCodec> categorical;

  int value_count(int metric_index) const;
  int encode_value(int metric_index, const MetricValue& value) const;
  MetricValue decode_value(int metric_index, int local) const;
};

// Fits a numeric codec per numerical metric (values keyed by metric index) and
// builds categorical codecs straight from registry labels. With Linear
// strategy, unbounded registry ranges fall back to observed min/max.
CodecSet fit_codec_set(const Registry& registry,
                       const std::map<int, std::vector<double>>& numeric_values,
                       BinStrategy strategy, int bins);

}  // namespace chainscore
