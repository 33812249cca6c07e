#include "chainscore/tokenizer.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "chainscore/error.hpp"
#include "chainscore/util.hpp"

namespace chainscore {

const char* strategy_name(BinStrategy s) {
  return s == BinStrategy::Linear ? "linear" : "percentile";
}

BinStrategy strategy_from_name(const std::string& name) {
  if (name == "linear") return BinStrategy::Linear;
  if (name == "percentile") return BinStrategy::Percentile;
  fail(Errc::ParseError, "unknown binning strategy '" + name + "'");
}

NumericCodec::NumericCodec(std::string metric, BinStrategy strategy, int requested_bins,
                           BinBoundaries boundaries, double clamp_lo, double clamp_hi)
    : metric_(std::move(metric)),
      strategy_(strategy),
      requested_bins_(requested_bins),
      boundaries_(std::move(boundaries)),
      clamp_lo_(clamp_lo),
      clamp_hi_(clamp_hi) {}

NumericCodec NumericCodec::fit_linear(const std::string& metric, double lo, double hi, int bins) {
  if (!std::isfinite(lo) || !std::isfinite(hi))
    fail(Errc::InvalidRange, "'" + metric + "': linear binning needs finite bounds");
  if (!(lo < hi))
    fail(Errc::InvalidRange, "'" + metric + "': empty range [" + format_double(lo) + ", " +
                                 format_double(hi) + "]");
  if (bins < 2) fail(Errc::TooFewBins, "'" + metric + "': " + std::to_string(bins) + " bins");

  BinBoundaries b;
  double width = (hi - lo) / double(bins);
  for (int i = 1; i < bins; ++i) b.edges.push_back(lo + width * double(i));
  for (int i = 0; i < bins; ++i) b.centroids.push_back(lo + width * (double(i) + 0.5));
  return NumericCodec(metric, BinStrategy::Linear, bins, std::move(b), lo, hi);
}

NumericCodec NumericCodec::fit_percentile(const std::string& metric, std::vector<double> samples,
                                          int bins) {
  if (samples.empty()) fail(Errc::EmptyInput, "'" + metric + "': no samples");
  for (double v : samples)
    if (!std::isfinite(v)) fail(Errc::NonFinite, "'" + metric + "': non-finite sample");
  if (bins < 2) fail(Errc::TooFewBins, "'" + metric + "': " + std::to_string(bins) + " bins");

  std::sort(samples.begin(), samples.end());
  double lo = samples.front(), hi = samples.back();
  if (!(lo < hi)) fail(Errc::DegenerateSample, "'" + metric + "': all samples equal");

  // interior quantile edges; duplicates collapse and edges that fall on the
  // clamp bounds are dropped, so the effective bin count can shrink
  BinBoundaries b;
  for (int i = 1; i < bins; ++i) {
    double edge = sorted_quantile(samples, double(i) / double(bins));
    if (edge <= lo || edge >= hi) continue;
    if (!b.edges.empty() && edge == b.edges.back()) continue;
    b.edges.push_back(edge);
  }

  size_t bin_count = b.edges.size() + 1;
  std::vector<double> sums(bin_count, 0.0);
  std::vector<int> counts(bin_count, 0);
  for (double v : samples) {
    size_t t = size_t(std::upper_bound(b.edges.begin(), b.edges.end(), v) - b.edges.begin());
    sums[t] += v;
    counts[t] += 1;
  }
  for (size_t t = 0; t < bin_count; ++t) {
    if (counts[t] > 0) {
      b.centroids.push_back(sums[t] / double(counts[t]));
    } else {
      double lower = (t == 0) ? lo : b.edges[t - 1];
      double upper = (t == bin_count - 1) ? hi : b.edges[t];
      b.centroids.push_back((lower + upper) / 2.0);
    }
  }
  return NumericCodec(metric, BinStrategy::Percentile, bins, std::move(b), lo, hi);
}

int NumericCodec::encode(double value) const {
  if (std::isnan(value)) fail(Errc::NonFinite, "'" + metric_ + "': cannot encode NaN");
  double v = std::min(std::max(value, clamp_lo_), clamp_hi_);
  return int(std::upper_bound(boundaries_.edges.begin(), boundaries_.edges.end(), v) -
             boundaries_.edges.begin());
}

double NumericCodec::decode(int token) const {
  if (token < 0 || token >= bins())
    fail(Errc::TokenOutOfBlock, "'" + metric_ + "': token " + std::to_string(token) +
                                    " outside " + std::to_string(bins()) + " bins");
  return boundaries_.centroids[size_t(token)];
}

std::string NumericCodec::to_json_string() const {
  nlohmann::json j;
  j["metric"] = metric_;
  j["strategy"] = strategy_name(strategy_);
  j["requested_bins"] = requested_bins_;
  j["clamp_lo"] = clamp_lo_;
  j["clamp_hi"] = clamp_hi_;
  j["edges"] = boundaries_.edges;
  j["centroids"] = boundaries_.centroids;
  return j.dump(2) + "\n";
}

NumericCodec NumericCodec::from_json_string(const std::string& text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    BinBoundaries b;
    b.edges = j.at("edges").get<std::vector<double>>();
    b.centroids = j.at("centroids").get<std::vector<double>>();
    if (b.centroids.empty() || b.edges.size() + 1 != b.centroids.size())
      fail(Errc::CorruptArtifact, "codec boundary sizes disagree");
    return NumericCodec(j.at("metric").get<std::string>(),
                        strategy_from_name(j.at("strategy").get<std::string>()),
                        j.at("requested_bins").get<int>(), std::move(b),
                        j.at("clamp_lo").get<double>(), j.at("clamp_hi").get<double>());
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("codec: ") + e.what());
  }
}

void NumericCodec::save(const std::string& path) const { write_text_file(path, to_json_string()); }

NumericCodec NumericCodec::load(const std::string& path, const std::string& expected_metric) {
  NumericCodec codec = from_json_string(read_text_file(path));
  if (codec.metric_ != expected_metric)
    fail(Errc::ArtifactMismatch, path + " holds a codec for '" + codec.metric_ + "', expected '" +
                                     expected_metric + "'");
  return codec;
}

CategoricalCodec::CategoricalCodec(std::string metric, std::vector<std::string> labels)
    : metric_(std::move(metric)), labels_(std::move(labels)) {
  if (labels_.empty()) fail(Errc::InvalidKind, "'" + metric_ + "': no labels");
  for (int i = 0; i < int(labels_.size()); ++i) {
    if (!by_label_.emplace(labels_[size_t(i)], i).second)
      fail(Errc::InvalidKind, "'" + metric_ + "': duplicate label '" + labels_[size_t(i)] + "'");
  }
}

int CategoricalCodec::encode(const std::string& label) const {
  auto it = by_label_.find(label);
  if (it == by_label_.end())
    fail(Errc::UnknownLabel, "'" + metric_ + "' has no label '" + label + "'");
  return it->second;
}

const std::string& CategoricalCodec::decode(int token) const {
  if (token < 0 || token >= size())
    fail(Errc::TokenOutOfBlock, "'" + metric_ + "': token " + std::to_string(token) +
                                    " outside " + std::to_string(size()) + " labels");
  return labels_[size_t(token)];
}

ReconReport reconstruction_report(const NumericCodec& codec, const std::vector<double>& values) {
  if (values.empty()) fail(Errc::EmptyInput, "reconstruction of an empty sample");
  ReconReport report;
  double se = 0.0, ae = 0.0;
  for (double v : values) {
    double err = v - codec.decode(codec.encode(v));
    se += err * err;
    ae += std::abs(err);
  }
  report.count = int(values.size());
  report.rmse = std::sqrt(se / double(values.size()));
  report.mae = ae / double(values.size());
  return report;
}

int CodecSet::value_count(int metric_index) const {
  if (auto it = numeric.find(metric_index); it != numeric.end()) return it->second.bins();
  if (auto it = categorical.find(metric_index); it != categorical.end()) return it->second.size();
  fail(Errc::UnknownMetric, "no codec for metric index " + std::to_string(metric_index));
}

int CodecSet::encode_value(int metric_index, const MetricValue& value) const {
  if (auto it = numeric.find(metric_index); it != numeric.end()) {
    const double* v = std::get_if<double>(&value);
    if (!v) fail(Errc::KindMismatch, "'" + it->second.metric() + "' takes numbers");
    return it->second.encode(*v);
  }
  if (auto it = categorical.find(metric_index); it != categorical.end()) {
    const std::string* label = std::get_if<std::string>(&value);
    if (!label) fail(Errc::KindMismatch, "'" + it->second.metric() + "' takes labels");
    return it->second.encode(*label);
  }
  fail(Errc::UnknownMetric, "no codec for metric index " + std::to_string(metric_index));
}

MetricValue CodecSet::decode_value(int metric_index, int local) const {
  if (auto it = numeric.find(metric_index); it != numeric.end())
    return MetricValue{it->second.decode(local)};
  if (auto it = categorical.find(metric_index); it != categorical.end())
    return MetricValue{it->second.decode(local)};
  fail(Errc::UnknownMetric, "no codec for metric index " + std::to_string(metric_index));
}

CodecSet fit_codec_set(const Registry& registry,
                       const std::map<int, std::vector<double>>& numeric_values,
                       BinStrategy strategy, int bins) {
  CodecSet set;
  for (const MetricSpec& spec : registry.metrics()) {
    if (!spec.is_numerical()) {
      set.categorical.emplace(spec.index, CategoricalCodec(spec.name, spec.categorical().labels));
      continue;
    }
    auto it = numeric_values.find(spec.index);
    if (strategy == BinStrategy::Percentile) {
      if (it == numeric_values.end() || it->second.empty())
        fail(Errc::EmptyInput, "'" + spec.name + "': percentile binning needs training values");
      set.numeric.emplace(spec.index, NumericCodec::fit_percentile(spec.name, it->second, bins));
      continue;
    }
    const NumericalKind& num = spec.numerical();
    double lo = num.lo, hi = num.hi;
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      // unbounded registry range: bin over what training actually produced
      if (it == numeric_values.end() || it->second.empty())
        fail(Errc::EmptyInput,
             "'" + spec.name + "': unbounded range needs training values to bin over");
      auto [mn, mx] = std::minmax_element(it->second.begin(), it->second.end());
      if (!std::isfinite(lo)) lo = *mn;
      if (!std::isfinite(hi)) hi = *mx;
    }
    set.numeric.emplace(spec.index, NumericCodec::fit_linear(spec.name, lo, hi, bins));
  }
  return set;
}

}  // namespace chainscore
