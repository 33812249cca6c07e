#include "chainscore/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "chainscore/error.hpp"
#include "chainscore/tokenizer.hpp"
#include "chainscore/vocabulary.hpp"

namespace chainscore {

namespace {

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

std::vector<Hypothesis> expand_impl(const TrainedModel& model,
                                    const ConditioningFeatures& features, const Hypothesis& hyp,
                                    int metric, int top_b, bool score_metadata) {
  if (top_b < 1) fail(Errc::BadBeamWidth, "step candidate count must be at least 1");
  if (metric < 0 || metric >= model.vocab().metric_count())
    fail(Errc::UnknownMetric, "cannot expand unregistered metric index " + std::to_string(metric));
  if (hyp.steps.count(metric))
    fail(Errc::MetricAlreadyDecided,
         "metric index " + std::to_string(metric) + " is already part of the hypothesis");

  const TokenVocabulary& vocab = model.vocab();
  const int meta_token = vocab.metadata_token(metric);
  NextTokenDistribution boundary = model.next_dist(features, hyp.tokens);
  const double log_meta = std::log(boundary.probs[size_t(meta_token)]);

  std::vector<int> with_meta = hyp.tokens;
  with_meta.push_back(meta_token);
  NextTokenDistribution values = model.next_dist(features, with_meta);
  const int base = vocab.value_base(metric);
  const int size = vocab.value_size(metric);

  // step one: provisional argmax; strict > keeps the lower token on ties
  std::vector<int> locals(static_cast<size_t>(size));
  for (int v = 0; v < size; ++v) locals[size_t(v)] = v;
  std::sort(locals.begin(), locals.end(), [&](int a, int b) {
    double pa = values.probs[size_t(base + a)], pb = values.probs[size_t(base + b)];
    if (pa != pb) return pa > pb;
    return a < b;
  });
  const double confidence = values.probs[size_t(base + locals[0])];

  // step two: the kept candidates, ranked by full-sequence log-likelihood
  // (the shared prefix makes that the value probability ranking)
  std::vector<Hypothesis> out;
  const int keep = std::min(top_b, size);
  out.reserve(size_t(keep));
  for (int k = 0; k < keep; ++k) {
    int local = locals[size_t(k)];
    double value_prob = values.probs[size_t(base + local)];
    Hypothesis next = hyp;
    next.tokens.push_back(meta_token);
    next.tokens.push_back(base + local);
    next.loglik = hyp.loglik + log_meta + std::log(value_prob);
    next.score = hyp.score + (score_metadata ? log_meta : 0.0) + std::log(value_prob);
    StepChoice step;
    step.value_token = base + local;
    step.confidence = confidence;
    step.value_prob = value_prob;
    step.position = int(hyp.order.size());
    next.order.push_back(metric);
    next.steps[metric] = step;
    out.push_back(std::move(next));
  }
  return out;
}

void validate_request(const Registry& registry, const DecodeRequest& request) {
  if (request.query.empty()) fail(Errc::EmptyQuery, "the decode query names no metrics");
  std::set<int> seen;
  for (int m : request.query) {
    if (m < 0 || m >= registry.size())
      fail(Errc::UnknownMetric, "query names unregistered metric index " + std::to_string(m));
    if (!seen.insert(m).second)
      fail(Errc::MetricAlreadyDecided,
           "query names '" + registry.at(m).name + "' more than once");
  }
  if (request.beam < 1) fail(Errc::BadBeamWidth, "beam width must be at least 1");
  if (request.step_top_b < 0) fail(Errc::BadBeamWidth, "step candidate count cannot be negative");
  if (request.mode == DecodeMode::Static) {
    std::set<int> order_set;
    for (int m : request.static_order) {
      if (!order_set.insert(m).second)
        fail(Errc::DuplicatePolicyMetric, "static order lists metric index " +
                                              std::to_string(m) + " more than once");
    }
    if (order_set != seen)
      fail(Errc::StaticOrderIncomplete, "a static order must cover exactly the query");
  }
}

MetricValue decoded_value(const CodecSet& codecs, const TokenVocabulary& vocab, int metric,
                          int token) {
  return codecs.decode_value(metric, vocab.info(token).local);
}

}  // namespace

Hypothesis expand_metric(const TrainedModel& model, const ConditioningFeatures& features,
                         const Hypothesis& hyp, int metric, int top_b, bool score_metadata) {
  return expand_impl(model, features, hyp, metric, top_b, score_metadata).front();
}

std::vector<Hypothesis> expand_metric_all(const TrainedModel& model,
                                          const ConditioningFeatures& features,
                                          const Hypothesis& hyp, int metric, int top_b,
                                          bool score_metadata) {
  return expand_impl(model, features, hyp, metric, top_b, score_metadata);
}

PredictionSet decode(const TrainedModel& model, const Registry& registry, const CodecSet& codecs,
                     const ConditioningFeatures& features, const DecodeRequest& request) {
  validate_request(registry, request);
  const int top_b = request.step_top_b > 0 ? request.step_top_b : request.beam;

  Hypothesis root;
  root.tokens = {TokenVocabulary::kStart};
  std::vector<Hypothesis> hyps{root};
  for (size_t round = 0; round < request.query.size(); ++round) {
    std::vector<Hypothesis> pool;
    for (const Hypothesis& hyp : hyps) {
      if (request.mode == DecodeMode::Static) {
        for (Hypothesis& cand : expand_impl(model, features, hyp, request.static_order[round],
                                            top_b, request.score_metadata))
          pool.push_back(std::move(cand));
        continue;
      }
      for (int metric : request.query) {
        if (hyp.steps.count(metric)) continue;
        std::vector<Hypothesis> cands =
            expand_impl(model, features, hyp, metric, request.wide_pool ? top_b : 1,
                        request.score_metadata);
        for (Hypothesis& cand : cands) pool.push_back(std::move(cand));
      }
    }
    std::sort(pool.begin(), pool.end(), better);
    if (int(pool.size()) > request.beam) pool.resize(size_t(request.beam));
    hyps = std::move(pool);
  }

  const Hypothesis& best = hyps.front();
  PredictionSet result;
  result.order = best.order;
  result.loglik = best.loglik;
  for (const auto& [metric, step] : best.steps) {
    MetricPrediction pred;
    pred.value = decoded_value(codecs, model.vocab(), metric, step.value_token);
    pred.token = step.value_token;
    pred.confidence = step.confidence;
    pred.value_prob = step.value_prob;
    pred.position = step.position;
    result.metrics[metric] = std::move(pred);
  }
  return result;
}

PredictionSet decode_teacher_forced(const TrainedModel& model, const Registry& registry,
                                    const CodecSet& codecs, const ConditioningFeatures& features,
                                    const LabelSet& labels, const std::vector<int>& order) {
  if (order.empty()) fail(Errc::EmptyQuery, "the teacher-forced order names no metrics");
  std::set<int> seen;
  for (int m : order) {
    if (m < 0 || m >= registry.size())
      fail(Errc::UnknownMetric, "order names unregistered metric index " + std::to_string(m));
    if (!seen.insert(m).second)
      fail(Errc::MetricAlreadyDecided,
           "order names '" + registry.at(m).name + "' more than once");
    if (!labels.count(m))
      fail(Errc::MissingGroundTruth,
           "teacher forcing needs a ground-truth label for '" + registry.at(m).name + "'");
  }

  const TokenVocabulary& vocab = model.vocab();
  PredictionSet result;
  result.order = order;
  std::vector<int> tokens{TokenVocabulary::kStart};
  for (size_t i = 0; i < order.size(); ++i) {
    int metric = order[i];
    int meta_token = vocab.metadata_token(metric);
    NextTokenDistribution boundary = model.next_dist(features, tokens);
    result.loglik += std::log(boundary.probs[size_t(meta_token)]);
    tokens.push_back(meta_token);

    NextTokenDistribution values = model.next_dist(features, tokens);
    const int base = vocab.value_base(metric);
    int best = 0;
    for (int v = 1; v < vocab.value_size(metric); ++v)
      if (values.probs[size_t(base + v)] > values.probs[size_t(base + best)]) best = v;

    MetricPrediction pred;
    pred.token = base + best;
    pred.value = decoded_value(codecs, vocab, metric, pred.token);
    pred.confidence = values.probs[size_t(base + best)];
    pred.value_prob = pred.confidence;
    pred.position = int(i);
    result.metrics[metric] = std::move(pred);

    int truth = base + codecs.encode_value(metric, labels.at(metric));
    result.loglik += std::log(values.probs[size_t(truth)]);
    tokens.push_back(truth);
  }
  return result;
}

OrderTrace order_trace(const std::vector<PredictionSet>& decodes, int metric_count) {
  if (metric_count < 0) fail(Errc::InvalidConfig, "negative metric count");
  OrderTrace trace;
  trace.visits.assign(size_t(metric_count), 0);
  std::vector<double> position_sum(size_t(metric_count), 0.0);
  for (const PredictionSet& decode : decodes) {
    for (const auto& [metric, pred] : decode.metrics) {
      if (metric < 0 || metric >= metric_count)
        fail(Errc::UnknownMetric, "decode carries metric index " + std::to_string(metric) +
                                      " outside the trace range");
      trace.visits[size_t(metric)] += 1;
      position_sum[size_t(metric)] += double(pred.position);
    }
  }
  trace.mean_position.assign(size_t(metric_count),
                             std::numeric_limits<double>::quiet_NaN());
  for (int m = 0; m < metric_count; ++m)
    if (trace.visits[size_t(m)] > 0)
      trace.mean_position[size_t(m)] = position_sum[size_t(m)] / double(trace.visits[size_t(m)]);
  return trace;
}

}  // namespace chainscore
