#pragma once

#include <map>
#include <string>
#include <vector>

#include "chainscore/metric_registry.hpp"
#include "chainscore/sequence_model.hpp"

namespace chainscore {

struct StepChoice {
  int value_token = -1;
  double confidence = 0.0;  // max prob of the provisional value distribution
  double value_prob = 0.0;  // probability of the token actually kept
  int position = -1;        // 0-based slot in the visit order
};

struct Hypothesis {
  std::vector<int> tokens;  // start + completed pairs, never end
  double loglik = 0.0;      // full sequence log-likelihood of the prefix
  double score = 0.0;       // selection score (= loglik unless metadata is excluded)
  std::vector<int> order;
  std::map<int, StepChoice> steps;
};

enum class DecodeMode { Dynamic, Static };

struct DecodeRequest {
  std::vector<int> query;          // metrics to predict; must be non-empty
  DecodeMode mode = DecodeMode::Dynamic;
  std::vector<int> static_order;   // Static mode: exact visit order (= query)
  int beam = 1;
  int step_top_b = 0;              // 0 -> follow beam
  bool wide_pool = false;          // dynamic pooling keeps all top-B values per pair
  bool score_metadata = true;      // include metadata log-probs in selection scores
};

struct MetricPrediction {
  MetricValue value;
  int token = -1;
  double confidence = 0.0;
  double value_prob = 0.0;
  int position = -1;
};

struct PredictionSet {
  std::string id;
  std::map<int, MetricPrediction> metrics;
  std::vector<int> order;
  double loglik = 0.0;
};

// Two-step expansion of one hypothesis by one metric: append the metadata
// token, read the value distribution (provisional value + confidence), score
// the top-B value candidates by full-sequence log-likelihood, keep the argmax.
Hypothesis expand_metric(const TrainedModel& model, const ConditioningFeatures& features,
                         const Hypothesis& hyp, int metric, int top_b, bool score_metadata);

// All top-B candidate extensions, best first (the wide-pool variant).
std::vector<Hypothesis> expand_metric_all(const TrainedModel& model,
                                          const ConditioningFeatures& features,
                                          const Hypothesis& hyp, int metric, int top_b,
                                          bool score_metadata);

// Confidence-oriented beam decode. Dynamic mode re-selects the next metric
// every round; static mode follows the given order and beams over values.
// Decoding halts when the query is exhausted; the end token is never emitted.
PredictionSet decode(const TrainedModel& model, const Registry& registry,
                     const CodecSet& codecs, const ConditioningFeatures& features,
                     const DecodeRequest& request);

// Predicts each metric in `order` from the current distribution, then appends
// the ground-truth token instead of the prediction. Every ordered metric must
// be labelled.
PredictionSet decode_teacher_forced(const TrainedModel& model, const Registry& registry,
                                    const CodecSet& codecs, const ConditioningFeatures& features,
                                    const LabelSet& labels, const std::vector<int>& order);

struct OrderTrace {
  std::vector<double> mean_position;  // NaN for metrics never visited
  std::vector<int> visits;
};

OrderTrace order_trace(const std::vector<PredictionSet>& decodes, int metric_count);

}  // namespace chainscore
