#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chainscore/chain.hpp"
#include "chainscore/dataset.hpp"
#include "chainscore/metric_registry.hpp"
#include "chainscore/tokenizer.hpp"
#include "chainscore/vocabulary.hpp"

namespace chainscore {

using ConditioningFeatures = std::vector<double>;

// Probabilities over the full token id space. Structurally illegal tokens are
// exactly 0; the legal support sums to 1.
struct NextTokenDistribution {
  std::vector<double> probs;
};

enum class ModelKind { Marginal, ConditionalBackoff };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

// Per-dimension quantile buckets over the first `dims` feature dimensions,
// combined into a single cell index.
class FeatureQuantizer {
 public:
  FeatureQuantizer() = default;
  static FeatureQuantizer fit(const std::vector<std::vector<double>>& features, int dims,
                              int buckets);

  int cell(const std::vector<double>& features) const;
  int cell_count() const;
  int dims() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::vector<double>>& edges() const { return edges_; }

  static FeatureQuantizer from_edges(std::vector<std::vector<double>> edges);

 private:
  std::vector<std::vector<double>> edges_;  // per used dimension
};

struct TrainOptions {
  ModelKind kind = ModelKind::ConditionalBackoff;
  double alpha = 0.5;       // additive smoothing, must be > 0
  int feature_dims = 2;     // dimensions quantized (clipped to the data)
  int feature_buckets = 4;  // quantile buckets per dimension
  uint64_t order_seed = 0;  // per-record random training orders
};

// Count-based chain sequence model.
//
// Metadata steps share one table for both kinds: metric occurrence counts plus
// an end count, smoothed, masked to {unvisited metadata} + end, renormalized.
// Value steps:
//   Marginal            per-metric value counts only.
//   ConditionalBackoff  counts keyed by (feature cell, previous pair, metric),
//                       smoothed toward (feature cell, prev metadata, metric),
//                       then (feature cell, metric), then the marginal. A
//                       context never seen in training passes through exactly,
//                       so fully unseen conditions reproduce the marginal.
class TrainedModel {
 public:
  TrainedModel() = default;

  static TrainedModel train(const Registry& registry, const TokenVocabulary& vocab,
                            const CodecSet& codecs, const std::vector<UtteranceRecord>& records,
                            const TrainOptions& options);

  // Distribution over the next token after a chain prefix ([start, ...],
  // either at a pair boundary or right after a metadata token).
  NextTokenDistribution next_dist(const ConditioningFeatures& features,
                                  const std::vector<int>& prefix) const;

  // Sum of per-step log probabilities for every token after start. Accepts
  // prefixes and complete sequences; the end factor is scored when present.
  double sequence_loglik(const ConditioningFeatures& features,
                         const std::vector<int>& tokens) const;

  ModelKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  uint64_t vocab_hash() const { return vocab_hash_; }
  const TokenVocabulary& vocab() const { return vocab_; }
  const FeatureQuantizer& quantizer() const { return quantizer_; }
  int feature_dim() const { return feature_dim_; }

  std::string to_json_string() const;
  void save(const std::string& path) const;
  // Vocabulary hash mismatch against `expect_vocab` raises VersionMismatch.
  static TrainedModel load(const std::string& path, const TokenVocabulary& expect_vocab);
  static TrainedModel from_json_string(const std::string& text, const TokenVocabulary& expect_vocab);

  // Assembles a model from explicit count tables (test and study harnesses).
  struct Tables {
    std::vector<double> metadata_counts;          // per metric
    double end_count = 0.0;
    std::vector<std::vector<double>> marginal;    // per metric, per local value
    // keys: {cell, prev_metric (-1 = chain start), prev_local (-1), metric}
    std::map<std::array<int, 4>, std::vector<double>> cond_pair;
    std::map<std::array<int, 3>, std::vector<double>> cond_meta;
    std::map<std::array<int, 2>, std::vector<double>> cond_cell;
  };
  static TrainedModel from_tables(const TokenVocabulary& vocab, ModelKind kind, double alpha,
                                  FeatureQuantizer quantizer, int feature_dim, Tables tables);
  const Tables& tables() const { return tables_; }

 private:
  struct PrefixState {
    std::vector<bool> visited;
    int pending_metric = -1;  // metric whose value is owed, -1 at boundary
    int prev_metric = -1;     // last completed pair, -1 = chain start
    int prev_local = -1;
    bool complete = false;
  };
  PrefixState walk_prefix(const std::vector<int>& tokens) const;
  void advance(PrefixState& st, int token) const;
  void value_probs(int cell, const PrefixState& st, int metric, std::vector<double>& out) const;
  void boundary_probs(const PrefixState& st, std::vector<double>& out) const;
  int feature_cell(const ConditioningFeatures& features) const;

  ModelKind kind_ = ModelKind::Marginal;
  double alpha_ = 0.5;
  int feature_dim_ = 0;
  uint64_t vocab_hash_ = 0;
  TokenVocabulary vocab_;
  FeatureQuantizer quantizer_;
  Tables tables_;
};

}  // namespace chainscore
