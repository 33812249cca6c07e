#include "chainscore/sequence_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "chainscore/error.hpp"
#include "chainscore/util.hpp"

namespace chainscore {

using nlohmann::json;

const char* model_kind_name(ModelKind k) {
  return k == ModelKind::Marginal ? "marginal" : "conditional_backoff";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "marginal") return ModelKind::Marginal;
  if (name == "conditional_backoff") return ModelKind::ConditionalBackoff;
  fail(Errc::InvalidConfig, "unknown model kind '" + name + "'");
}

FeatureQuantizer FeatureQuantizer::fit(const std::vector<std::vector<double>>& features, int dims,
                                       int buckets) {
  if (dims < 0) fail(Errc::InvalidConfig, "negative feature dimension count");
  if (buckets < 1) fail(Errc::InvalidConfig, "quantizer needs at least one bucket");
  size_t use = size_t(dims);
  for (const auto& row : features) use = std::min(use, row.size());
  if (features.empty()) use = 0;

  std::vector<std::vector<double>> edges(use);
  for (size_t d = 0; d < use; ++d) {
    std::vector<double> column;
    column.reserve(features.size());
    for (const auto& row : features) {
      if (!std::isfinite(row[d])) fail(Errc::NonFinite, "feature values must be finite");
      column.push_back(row[d]);
    }
    std::sort(column.begin(), column.end());
    double lo = column.front(), hi = column.back();
    // edges strictly inside the sample range; duplicates collapse, so a
    // constant dimension ends up a single bucket
    for (int i = 1; i < buckets; ++i) {
      double e = sorted_quantile(column, double(i) / double(buckets));
      if (e <= lo || e >= hi) continue;
      if (!edges[d].empty() && e == edges[d].back()) continue;
      edges[d].push_back(e);
    }
  }
  return from_edges(std::move(edges));
}

FeatureQuantizer FeatureQuantizer::from_edges(std::vector<std::vector<double>> edges) {
  for (auto& dim : edges) {
    for (double e : dim)
      if (!std::isfinite(e)) fail(Errc::NonFinite, "quantizer edges must be finite");
    if (!std::is_sorted(dim.begin(), dim.end()))
      fail(Errc::InvalidConfig, "quantizer edges must be sorted");
  }
  FeatureQuantizer q;
  q.edges_ = std::move(edges);
  return q;
}

int FeatureQuantizer::cell(const std::vector<double>& features) const {
  int index = 0;
  for (size_t d = 0; d < edges_.size(); ++d) {
    int bucket = 0;
    if (d < features.size()) {
      double v = features[d];
      if (std::isnan(v)) fail(Errc::NonFinite, "cannot quantize a NaN feature");
      bucket = int(std::upper_bound(edges_[d].begin(), edges_[d].end(), v) - edges_[d].begin());
    }
    index = index * int(edges_[d].size() + 1) + bucket;
  }
  return index;
}

int FeatureQuantizer::cell_count() const {
  int count = 1;
  for (const auto& dim : edges_) count *= int(dim.size() + 1);
  return count;
}

namespace {

void bump(std::vector<double>& counts, int size, int local) {
  if (counts.empty()) counts.assign(size_t(size), 0.0);
  counts[size_t(local)] += 1.0;
}

}  // namespace

TrainedModel TrainedModel::train(const Registry& registry, const TokenVocabulary& vocab,
                                 const CodecSet& codecs,
                                 const std::vector<UtteranceRecord>& records,
                                 const TrainOptions& options) {
  if (records.empty()) fail(Errc::EmptyDataset, "cannot train on an empty dataset");
  if (!(options.alpha > 0.0)) fail(Errc::BadSmoothing, "smoothing alpha must be positive");
  const int metric_count = vocab.metric_count();
  if (metric_count != registry.size())
    fail(Errc::DimensionMismatch, "vocabulary and registry disagree on the metric count");

  TrainedModel model;
  model.kind_ = options.kind;
  model.alpha_ = options.alpha;
  model.vocab_hash_ = vocab.hash();
  model.vocab_ = vocab;
  model.tables_.metadata_counts.assign(size_t(metric_count), 0.0);
  model.tables_.marginal.resize(size_t(metric_count));
  for (int m = 0; m < metric_count; ++m)
    model.tables_.marginal[size_t(m)].assign(size_t(vocab.value_size(m)), 0.0);

  if (options.kind == ModelKind::ConditionalBackoff) {
    std::vector<std::vector<double>> features;
    features.reserve(records.size());
    for (const auto& rec : records) features.push_back(rec.features);
    model.quantizer_ =
        FeatureQuantizer::fit(features, options.feature_dims, options.feature_buckets);
    model.feature_dim_ = model.quantizer_.dims();
  }

  for (size_t i = 0; i < records.size(); ++i) {
    const UtteranceRecord& rec = records[i];
    if (rec.labels.empty()) continue;

    std::vector<int> order;
    for (const auto& [m, value] : rec.labels) order.push_back(m);
    Rng rng = Rng::substream(options.order_seed, uint64_t(i));
    rng.shuffle(order);

    int cell = options.kind == ModelKind::ConditionalBackoff ? model.quantizer_.cell(rec.features)
                                                             : 0;
    model.tables_.end_count += 1.0;
    int prev_metric = -1, prev_local = -1;
    for (int m : order) {
      int local = codecs.encode_value(m, rec.labels.at(m));
      int size = vocab.value_size(m);
      model.tables_.metadata_counts[size_t(m)] += 1.0;
      model.tables_.marginal[size_t(m)][size_t(local)] += 1.0;
      if (options.kind == ModelKind::ConditionalBackoff) {
        bump(model.tables_.cond_pair[{cell, prev_metric, prev_local, m}], size, local);
        bump(model.tables_.cond_meta[{cell, prev_metric, m}], size, local);
        bump(model.tables_.cond_cell[{cell, m}], size, local);
      }
      prev_metric = m;
      prev_local = local;
    }
  }
  return model;
}

TrainedModel TrainedModel::from_tables(const TokenVocabulary& vocab, ModelKind kind, double alpha,
                                       FeatureQuantizer quantizer, int feature_dim,
                                       Tables tables) {
  if (!(alpha > 0.0)) fail(Errc::BadSmoothing, "smoothing alpha must be positive");
  const int metric_count = vocab.metric_count();
  if (tables.metadata_counts.empty()) tables.metadata_counts.assign(size_t(metric_count), 0.0);
  if (int(tables.metadata_counts.size()) != metric_count)
    fail(Errc::DimensionMismatch, "metadata count table does not match the metric count");
  if (tables.marginal.empty()) tables.marginal.resize(size_t(metric_count));
  if (int(tables.marginal.size()) != metric_count)
    fail(Errc::DimensionMismatch, "marginal table does not match the metric count");
  for (int m = 0; m < metric_count; ++m) {
    auto& counts = tables.marginal[size_t(m)];
    if (counts.empty()) counts.assign(size_t(vocab.value_size(m)), 0.0);
    if (int(counts.size()) != vocab.value_size(m))
      fail(Errc::DimensionMismatch, "marginal counts do not match a value block");
  }
  auto check_block = [&](int metric, size_t size) {
    if (metric < 0 || metric >= metric_count)
      fail(Errc::DimensionMismatch, "conditional table keys an unknown metric");
    if (int(size) != vocab.value_size(metric))
      fail(Errc::DimensionMismatch, "conditional counts do not match a value block");
  };
  for (const auto& [key, counts] : tables.cond_pair) check_block(key[3], counts.size());
  for (const auto& [key, counts] : tables.cond_meta) check_block(key[2], counts.size());
  for (const auto& [key, counts] : tables.cond_cell) check_block(key[1], counts.size());

  TrainedModel model;
  model.kind_ = kind;
  model.alpha_ = alpha;
  model.feature_dim_ = feature_dim;
  model.vocab_hash_ = vocab.hash();
  model.vocab_ = vocab;
  model.quantizer_ = std::move(quantizer);
  model.tables_ = std::move(tables);
  return model;
}

void TrainedModel::advance(PrefixState& st, int token) const {
  if (st.complete) fail(Errc::MalformedPrefix, "tokens after the end token");
  if (st.pending_metric >= 0) {
    if (!vocab_.is_value(token))
      fail(Errc::MalformedPrefix, "a metadata token must be followed by a value token");
    TokenVocabulary::TokenInfo info = vocab_.info(token);
    if (info.metric != st.pending_metric)
      fail(Errc::MalformedPrefix, "value token outside the announced metric's block");
    st.prev_metric = st.pending_metric;
    st.prev_local = info.local;
    st.pending_metric = -1;
    return;
  }
  if (token == TokenVocabulary::kEnd) {
    st.complete = true;
    return;
  }
  if (!vocab_.is_metadata(token))
    fail(Errc::MalformedPrefix, "expected a metadata token or the end token");
  int metric = vocab_.info(token).metric;
  if (st.visited[size_t(metric)]) fail(Errc::MalformedPrefix, "metric visited twice");
  st.visited[size_t(metric)] = true;
  st.pending_metric = metric;
}

TrainedModel::PrefixState TrainedModel::walk_prefix(const std::vector<int>& tokens) const {
  if (tokens.empty() || tokens.front() != TokenVocabulary::kStart)
    fail(Errc::MalformedPrefix, "chain prefixes begin with the start token");
  PrefixState st;
  st.visited.assign(size_t(vocab_.metric_count()), false);
  for (size_t i = 1; i < tokens.size(); ++i) advance(st, tokens[i]);
  return st;
}

void TrainedModel::boundary_probs(const PrefixState& st, std::vector<double>& out) const {
  const int metric_count = vocab_.metric_count();
  out.assign(size_t(metric_count) + 1, 0.0);
  double total = tables_.end_count + alpha_;
  for (int m = 0; m < metric_count; ++m)
    if (!st.visited[size_t(m)]) total += tables_.metadata_counts[size_t(m)] + alpha_;
  for (int m = 0; m < metric_count; ++m)
    if (!st.visited[size_t(m)]) out[size_t(m)] = (tables_.metadata_counts[size_t(m)] + alpha_) / total;
  out[size_t(metric_count)] = (tables_.end_count + alpha_) / total;
}

void TrainedModel::value_probs(int cell, const PrefixState& st, int metric,
                               std::vector<double>& out) const {
  const int size = vocab_.value_size(metric);
  const std::vector<double>& marginal = tables_.marginal[size_t(metric)];
  double total = std::accumulate(marginal.begin(), marginal.end(), 0.0);
  out.resize(size_t(size));
  for (int v = 0; v < size; ++v)
    out[size_t(v)] = (marginal[size_t(v)] + alpha_) / (total + alpha_ * double(size));
  if (kind_ == ModelKind::Marginal) return;

  // Each observed level pulls the previous estimate toward its counts; a
  // level with no observations leaves the estimate untouched, so a fully
  // unseen context reproduces the marginal exactly.
  auto blend = [&](const std::vector<double>& counts) {
    double level_total = std::accumulate(counts.begin(), counts.end(), 0.0);
    for (int v = 0; v < size; ++v)
      out[size_t(v)] = (counts[size_t(v)] + alpha_ * out[size_t(v)]) / (level_total + alpha_);
  };
  if (auto it = tables_.cond_cell.find({cell, metric}); it != tables_.cond_cell.end())
    blend(it->second);
  if (auto it = tables_.cond_meta.find({cell, st.prev_metric, metric});
      it != tables_.cond_meta.end())
    blend(it->second);
  if (auto it = tables_.cond_pair.find({cell, st.prev_metric, st.prev_local, metric});
      it != tables_.cond_pair.end())
    blend(it->second);
}

int TrainedModel::feature_cell(const ConditioningFeatures& features) const {
  if (kind_ == ModelKind::Marginal) return 0;
  return quantizer_.cell(features);
}

NextTokenDistribution TrainedModel::next_dist(const ConditioningFeatures& features,
                                              const std::vector<int>& prefix) const {
  PrefixState st = walk_prefix(prefix);
  if (st.complete) fail(Errc::MalformedPrefix, "the sequence already ended");

  NextTokenDistribution dist;
  dist.probs.assign(size_t(vocab_.size()), 0.0);
  if (st.pending_metric >= 0) {
    std::vector<double> block;
    value_probs(feature_cell(features), st, st.pending_metric, block);
    int base = vocab_.value_base(st.pending_metric);
    for (size_t v = 0; v < block.size(); ++v) dist.probs[size_t(base) + v] = block[v];
    return dist;
  }
  std::vector<double> boundary;
  boundary_probs(st, boundary);
  for (int m = 0; m < vocab_.metric_count(); ++m)
    if (!st.visited[size_t(m)]) dist.probs[size_t(vocab_.metadata_token(m))] = boundary[size_t(m)];
  dist.probs[TokenVocabulary::kEnd] = boundary[size_t(vocab_.metric_count())];
  return dist;
}

double TrainedModel::sequence_loglik(const ConditioningFeatures& features,
                                     const std::vector<int>& tokens) const {
  if (tokens.empty() || tokens.front() != TokenVocabulary::kStart)
    fail(Errc::MalformedPrefix, "chain sequences begin with the start token");
  PrefixState st;
  st.visited.assign(size_t(vocab_.metric_count()), false);
  const int cell = kind_ == ModelKind::ConditionalBackoff ? feature_cell(features) : 0;

  double loglik = 0.0;
  std::vector<double> scratch;
  for (size_t i = 1; i < tokens.size(); ++i) {
    int token = tokens[i];
    if (st.complete) fail(Errc::MalformedPrefix, "tokens after the end token");
    if (st.pending_metric >= 0) {
      if (!vocab_.is_value(token) || vocab_.info(token).metric != st.pending_metric)
        fail(Errc::MalformedPrefix, "value token outside the announced metric's block");
      value_probs(cell, st, st.pending_metric, scratch);
      loglik += std::log(scratch[size_t(vocab_.info(token).local)]);
    } else {
      boundary_probs(st, scratch);
      if (token == TokenVocabulary::kEnd) {
        loglik += std::log(scratch[size_t(vocab_.metric_count())]);
      } else {
        if (!vocab_.is_metadata(token))
          fail(Errc::MalformedPrefix, "expected a metadata token or the end token");
        int metric = vocab_.info(token).metric;
        if (st.visited[size_t(metric)]) fail(Errc::MalformedPrefix, "metric visited twice");
        loglik += std::log(scratch[size_t(metric)]);
      }
    }
    advance(st, token);
  }
  return loglik;
}

namespace {

template <size_t N>
json cond_table_to_json(const std::map<std::array<int, N>, std::vector<double>>& table) {
  json out = json::array();
  for (const auto& [key, counts] : table)
    out.push_back({{"key", key}, {"counts", counts}});
  return out;
}

template <size_t N>
void cond_table_from_json(const json& in,
                          std::map<std::array<int, N>, std::vector<double>>& table) {
  for (const json& entry : in) {
    const json& key_json = entry.at("key");
    if (key_json.size() != N) fail(Errc::CorruptArtifact, "conditional table key has bad arity");
    std::array<int, N> key{};
    for (size_t i = 0; i < N; ++i) key[i] = key_json[i].get<int>();
    table[key] = entry.at("counts").get<std::vector<double>>();
  }
}

constexpr const char* kModelFormat = "chainscore.model";
constexpr int kModelVersion = 1;

}  // namespace

std::string TrainedModel::to_json_string() const {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["kind"] = model_kind_name(kind_);
  j["alpha"] = alpha_;
  j["feature_dim"] = feature_dim_;
  j["vocab_hash"] = hex64(vocab_hash_);
  j["quantizer_edges"] = quantizer_.edges();
  j["metadata_counts"] = tables_.metadata_counts;
  j["end_count"] = tables_.end_count;
  j["marginal"] = tables_.marginal;
  j["cond_pair"] = cond_table_to_json(tables_.cond_pair);
  j["cond_meta"] = cond_table_to_json(tables_.cond_meta);
  j["cond_cell"] = cond_table_to_json(tables_.cond_cell);
  return j.dump(2) + "\n";
}

void TrainedModel::save(const std::string& path) const { write_text_file(path, to_json_string()); }

TrainedModel TrainedModel::from_json_string(const std::string& text,
                                            const TokenVocabulary& expect_vocab) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::CorruptArtifact, std::string("model artifact is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kModelFormat)
      fail(Errc::CorruptArtifact, "not a model artifact");
    if (j.value("version", -1) != kModelVersion)
      fail(Errc::VersionMismatch, "unsupported model artifact version");
    uint64_t stored_hash = std::stoull(j.at("vocab_hash").get<std::string>(), nullptr, 16);
    if (stored_hash != expect_vocab.hash())
      fail(Errc::VersionMismatch,
           "model was trained against a different vocabulary (stored " +
               j.at("vocab_hash").get<std::string>() + ", expected " +
               hex64(expect_vocab.hash()) + ")");

    Tables tables;
    tables.metadata_counts = j.at("metadata_counts").get<std::vector<double>>();
    tables.end_count = j.at("end_count").get<double>();
    tables.marginal = j.at("marginal").get<std::vector<std::vector<double>>>();
    cond_table_from_json<4>(j.at("cond_pair"), tables.cond_pair);
    cond_table_from_json<3>(j.at("cond_meta"), tables.cond_meta);
    cond_table_from_json<2>(j.at("cond_cell"), tables.cond_cell);

    FeatureQuantizer quantizer = FeatureQuantizer::from_edges(
        j.at("quantizer_edges").get<std::vector<std::vector<double>>>());
    return from_tables(expect_vocab, model_kind_from_name(j.at("kind").get<std::string>()),
                       j.at("alpha").get<double>(), std::move(quantizer),
                       j.at("feature_dim").get<int>(), std::move(tables));
  } catch (const json::exception& e) {
    fail(Errc::CorruptArtifact, std::string("model artifact is missing fields: ") + e.what());
  }
}

TrainedModel TrainedModel::load(const std::string& path, const TokenVocabulary& expect_vocab) {
  return from_json_string(read_text_file(path), expect_vocab);
}

}  // namespace chainscore
