#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "chainscore/chain.hpp"
#include "chainscore/dataset.hpp"
#include "chainscore/error.hpp"
#include "chainscore/metric_registry.hpp"
#include "chainscore/sequence_model.hpp"
#include "chainscore/tokenizer.hpp"
#include "chainscore/util.hpp"
#include "chainscore/vocabulary.hpp"
#include "doctest.h"

using namespace chainscore;

namespace {

Registry two_label_registry() {
  Registry reg;
  reg.register_metric("Gender", CategoricalKind{{"Male", "Female"}});
  return reg;
}

Registry pair_registry() {
  Registry reg;
  reg.register_metric("A", CategoricalKind{{"x", "y"}});
  reg.register_metric("B", CategoricalKind{{"x", "y"}});
  return reg;
}

Registry toy_registry() {
  Registry reg;
  reg.register_metric("Gender", CategoricalKind{{"Male", "Female"}});
  reg.register_metric("Emotion", CategoricalKind{{"Happy", "Sad", "Neutral"}});
  return reg;
}

CodecSet codecs_for(const Registry& reg) {
  return fit_codec_set(reg, {}, BinStrategy::Linear, 500);
}

UtteranceRecord make_record(std::string id, std::vector<double> features, LabelSet labels) {
  UtteranceRecord r;
  r.id = std::move(id);
  r.features = std::move(features);
  r.labels = std::move(labels);
  return r;
}

double total_probability(const TrainedModel& model, const TokenVocabulary& vocab,
                         const Registry& reg, const std::vector<double>& features) {
  // Walk the whole tree of legal complete sequences and add up their
  // probabilities. A properly normalized model makes this exactly one.
  double total = 0.0;
  std::function<void(ChainSequence&)> recurse = [&](ChainSequence& prefix) {
    NextTokenDistribution dist = model.next_dist(features, prefix);
    for (int t = 0; t < int(dist.probs.size()); ++t) {
      if (dist.probs[t] <= 0.0) continue;
      if (t == TokenVocabulary::kEnd) {
        ChainSequence full = prefix;
        full.push_back(t);
        total += std::exp(model.sequence_loglik(features, full));
        continue;
      }
      prefix.push_back(t);
      if (vocab.is_metadata(t)) {
        NextTokenDistribution vals = model.next_dist(features, prefix);
        for (int v = 0; v < int(vals.probs.size()); ++v) {
          if (vals.probs[v] <= 0.0) continue;
          prefix.push_back(v);
          recurse(prefix);
          prefix.pop_back();
        }
      }
      prefix.pop_back();
    }
  };
  ChainSequence start{TokenVocabulary::kStart};
  recurse(start);
  (void)reg;
  return total;
}

}  // namespace

TEST_CASE("marginal probabilities are smoothed counts") {
  Registry reg = two_label_registry();
  CodecSet codecs = codecs_for(reg);
  TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);

  std::vector<UtteranceRecord> records = {
      make_record("a", {0.0, 0.0}, {{0, MetricValue{std::string("Male")}}}),
      make_record("b", {0.0, 0.0}, {{0, MetricValue{std::string("Male")}}}),
      make_record("c", {0.0, 0.0}, {{0, MetricValue{std::string("Female")}}}),
  };
  TrainOptions opt;
  opt.kind = ModelKind::Marginal;
  opt.alpha = 0.5;
  TrainedModel model = TrainedModel::train(reg, vocab, codecs, records, opt);

  ChainSequence at_meta{TokenVocabulary::kStart, vocab.metadata_token(0)};
  NextTokenDistribution vals = model.next_dist({0.0, 0.0}, at_meta);
  // counts Male 2, Female 1, alpha 0.5: (2.5, 1.5) / 4
  CHECK(vals.probs[vocab.value_token(0, 0)] == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(vals.probs[vocab.value_token(0, 1)] == doctest::Approx(0.375).epsilon(1e-12));

  // metadata: Gender seen 3 times, 3 sequences ended: (3.5, 3.5) renormalized
  ChainSequence at_start{TokenVocabulary::kStart};
  NextTokenDistribution meta = model.next_dist({0.0, 0.0}, at_start);
  CHECK(meta.probs[vocab.metadata_token(0)] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(meta.probs[TokenVocabulary::kEnd] == doctest::Approx(0.5).epsilon(1e-12));

  // once Gender is decided only end remains
  ChainSequence after_pair{TokenVocabulary::kStart, vocab.metadata_token(0),
                           vocab.value_token(0, 0)};
  NextTokenDistribution boundary = model.next_dist({0.0, 0.0}, after_pair);
  CHECK(boundary.probs[TokenVocabulary::kEnd] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(boundary.probs[vocab.metadata_token(0)] == 0.0);
}

TEST_CASE("distributions are valid on random legal prefixes") {
  Registry reg = toy_registry();
  CodecSet codecs = codecs_for(reg);
  TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);

  Rng data_rng(17);
  std::vector<UtteranceRecord> records;
  for (int i = 0; i < 60; ++i) {
    LabelSet labels;
    if (data_rng.next_double() < 0.8)
      labels[0] = MetricValue{std::string(data_rng.next_double() < 0.5 ? "Male" : "Female")};
    if (data_rng.next_double() < 0.8) {
      const char* names[3] = {"Happy", "Sad", "Neutral"};
      labels[1] = MetricValue{std::string(names[data_rng.next_below(3)])};
    }
    records.push_back(make_record("r" + std::to_string(i),
                                  {data_rng.next_normal(), data_rng.next_normal()},
                                  std::move(labels)));
  }
  TrainOptions opt;
  opt.kind = ModelKind::ConditionalBackoff;
  TrainedModel model = TrainedModel::train(reg, vocab, codecs, records, opt);

  Rng rng(4);
  for (int it = 0; it < 10000; ++it) {
    // assemble a random legal prefix
    ChainSequence prefix{TokenVocabulary::kStart};
    std::vector<int> order{0, 1};
    rng.shuffle(order);
    size_t pairs = rng.next_below(3);
    for (size_t k = 0; k < pairs; ++k) {
      int m = order[k];
      prefix.push_back(vocab.metadata_token(m));
      prefix.push_back(vocab.value_token(m, int(rng.next_below(uint64_t(vocab.value_size(m))))));
    }
    bool pending = pairs < 2 && rng.next_double() < 0.4;
    if (pending) prefix.push_back(vocab.metadata_token(order[pairs]));

    std::vector<double> features{rng.next_normal(), rng.next_normal()};
    NextTokenDistribution dist = model.next_dist(features, prefix);
    REQUIRE(dist.probs.size() == size_t(vocab.size()));
    double sum = 0.0;
    for (int t = 0; t < int(dist.probs.size()); ++t) {
      CHECK(dist.probs[t] >= 0.0);
      sum += dist.probs[t];
      bool legal;
      if (pending) {
        int m = order[pairs];
        legal = vocab.is_value(t) && vocab.info(t).metric == m;
      } else {
        bool unvisited_meta = false;
        if (vocab.is_metadata(t)) {
          unvisited_meta = true;
          for (size_t k = 0; k < pairs; ++k)
            if (vocab.info(t).metric == order[k]) unvisited_meta = false;
        }
        legal = unvisited_meta || t == TokenVocabulary::kEnd;
      }
      if (!legal) CHECK(dist.probs[t] == 0.0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("malformed prefixes are rejected") {
  Registry reg = toy_registry();
  CodecSet codecs = codecs_for(reg);
  TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);
  std::vector<UtteranceRecord> records = {
      make_record("a", {0.0, 0.0}, {{0, MetricValue{std::string("Male")}}})};
  TrainOptions opt;
  opt.kind = ModelKind::Marginal;
  TrainedModel model = TrainedModel::train(reg, vocab, codecs, records, opt);

  std::vector<double> f{0.0, 0.0};
  // empty, missing start, repeated metric, bare value, end mid-way
  CHECK_THROWS_AS(model.next_dist(f, {}), Error);
  CHECK_THROWS_AS(model.next_dist(f, {vocab.metadata_token(0)}), Error);
  CHECK_THROWS_AS(model.next_dist(f, {TokenVocabulary::kStart, vocab.metadata_token(0),
                                      vocab.value_token(0, 0), vocab.metadata_token(0)}),
                  Error);
  CHECK_THROWS_AS(model.next_dist(f, {TokenVocabulary::kStart, vocab.value_token(0, 0)}), Error);
  CHECK_THROWS_AS(model.next_dist(f, {TokenVocabulary::kStart, TokenVocabulary::kEnd,
                                      vocab.metadata_token(0)}),
                  Error);
  // value token for the wrong metric while another is pending
  CHECK_THROWS_AS(model.next_dist(f, {TokenVocabulary::kStart, vocab.metadata_token(0),
                                      vocab.value_token(1, 0)}),
                  Error);
}

TEST_CASE("every complete sequence probability sums to one") {
  Registry reg = toy_registry();
  CodecSet codecs = codecs_for(reg);
  TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);

  Rng data_rng(3);
  std::vector<UtteranceRecord> records;
  for (int i = 0; i < 40; ++i) {
    LabelSet labels;
    if (data_rng.next_double() < 0.7)
      labels[0] = MetricValue{std::string(data_rng.next_double() < 0.6 ? "Male" : "Female")};
    if (data_rng.next_double() < 0.7) {
      const char* names[3] = {"Happy", "Sad", "Neutral"};
      labels[1] = MetricValue{std::string(names[data_rng.next_below(3)])};
    }
    records.push_back(make_record("r" + std::to_string(i),
                                  {data_rng.next_normal(), data_rng.next_normal()},
                                  std::move(labels)));
  }

  for (ModelKind kind : {ModelKind::Marginal, ModelKind::ConditionalBackoff}) {
    TrainOptions opt;
    opt.kind = kind;
    TrainedModel model = TrainedModel::train(reg, vocab, codecs, records, opt);
    CHECK(total_probability(model, vocab, reg, {0.3, -0.2}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(total_probability(model, vocab, reg, {2.5, 2.5}) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sequence loglik telescopes over next-token factors") {
  Registry reg = toy_registry();
  CodecSet codecs = codecs_for(reg);
  TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);
  Rng data_rng(11);
  std::vector<UtteranceRecord> records;
  for (int i = 0; i < 30; ++i) {
    LabelSet labels;
    labels[0] = MetricValue{std::string(data_rng.next_double() < 0.5 ? "Male" : "Female")};
    const char* names[3] = {"Happy", "Sad", "Neutral"};
    labels[1] = MetricValue{std::string(names[data_rng.next_below(3)])};
    records.push_back(make_record("r" + std::to_string(i),
                                  {data_rng.next_normal(), data_rng.next_normal()},
                                  std::move(labels)));
  }
  TrainOptions opt;
  opt.kind = ModelKind::ConditionalBackoff;
  TrainedModel model = TrainedModel::train(reg, vocab, codecs, records, opt);

  std::vector<double> f{0.1, 0.4};
  ChainSequence seq{TokenVocabulary::kStart, vocab.metadata_token(1), vocab.value_token(1, 2),
                    vocab.metadata_token(0),  vocab.value_token(0, 1), TokenVocabulary::kEnd};
  double manual = 0.0;
  double last = 0.0;
  for (size_t i = 1; i < seq.size(); ++i) {
    ChainSequence prefix(seq.begin(), seq.begin() + long(i));
    manual += std::log(model.next_dist(f, prefix).probs[seq[i]]);
    ChainSequence scored(seq.begin(), seq.begin() + long(i) + 1);
    double ll = model.sequence_loglik(f, scored);
    CHECK(ll <= last + 1e-12);  // adding a token never raises the loglik
    last = ll;
  }
  CHECK(model.sequence_loglik(f, seq) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("unseen contexts fall back to the global value distribution") {
  Registry reg;
  reg.register_metric("A", CategoricalKind{{"x", "y", "z"}});
  CodecSet codecs = codecs_for(reg);
  TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);

  // A only ever occurs alongside low feature values; high feature values are
  // label-free, so conditioning on them has nothing local to say about A.
  std::vector<UtteranceRecord> records;
  Rng data_rng(7);
  for (int i = 0; i < 50; ++i) {
    const char* names[3] = {"x", "x", "y"};
    records.push_back(make_record("lo" + std::to_string(i), {-1.0, 0.0},
                                  {{0, MetricValue{std::string(names[i % 3])}}}));
    records.push_back(make_record("hi" + std::to_string(i), {1.0, 0.0}, {}));
  }

  TrainOptions opt;
  opt.alpha = 0.5;
  opt.kind = ModelKind::ConditionalBackoff;
  TrainedModel backoff = TrainedModel::train(reg, vocab, codecs, records, opt);
  opt.kind = ModelKind::Marginal;
  TrainedModel marginal = TrainedModel::train(reg, vocab, codecs, records, opt);

  ChainSequence at_meta{TokenVocabulary::kStart, vocab.metadata_token(0)};
  NextTokenDistribution from_backoff = backoff.next_dist({1.0, 0.0}, at_meta);
  NextTokenDistribution from_marginal = marginal.next_dist({1.0, 0.0}, at_meta);
  for (size_t t = 0; t < from_backoff.probs.size(); ++t)
    CHECK(from_backoff.probs[t] == from_marginal.probs[t]);

  // where A was actually observed the conditional estimate differs
  NextTokenDistribution seen = backoff.next_dist({-1.0, 0.0}, at_meta);
  bool any_diff = false;
  for (size_t t = 0; t < seen.probs.size(); ++t)
    if (seen.probs[t] != from_marginal.probs[t]) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("conditioning on a deterministic dependency beats the marginal") {
  Registry reg = pair_registry();
  CodecSet codecs = codecs_for(reg);
  TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);

  // B copies A exactly; the marginal over B stays a coin flip
  Rng data_rng(23);
  std::vector<UtteranceRecord> train_records, held_out;
  for (int i = 0; i < 300; ++i) {
    std::string v = data_rng.next_double() < 0.5 ? "x" : "y";
    auto rec = make_record("r" + std::to_string(i), {0.0, 0.0},
                           {{0, MetricValue{v}}, {1, MetricValue{v}}});
    (i < 200 ? train_records : held_out).push_back(rec);
  }

  TrainOptions opt;
  opt.kind = ModelKind::ConditionalBackoff;
  TrainedModel cond = TrainedModel::train(reg, vocab, codecs, train_records, opt);
  opt.kind = ModelKind::Marginal;
  TrainedModel marg = TrainedModel::train(reg, vocab, codecs, train_records, opt);

  FixedOrder order{{0, 1}};
  double cond_total = 0.0, marg_total = 0.0;
  for (const auto& rec : held_out) {
    ChainSequence seq = build_target(reg, vocab, codecs, rec.labels, order);
    cond_total += cond.sequence_loglik(rec.features, seq);
    marg_total += marg.sequence_loglik(rec.features, seq);
  }
  CHECK(cond_total > marg_total + 10.0);
}

TEST_CASE("feature quantizer buckets by training quantiles") {
  std::vector<std::vector<double>> features;
  for (int i = 0; i < 100; ++i) features.push_back({double(i), 7.0});
  FeatureQuantizer q = FeatureQuantizer::fit(features, 2, 4);
  CHECK(q.dims() == 2);
  REQUIRE(q.edges()[0].size() == 3);
  CHECK(q.edges()[0][0] == doctest::Approx(24.75).epsilon(1e-12));
  CHECK(q.edges()[0][1] == doctest::Approx(49.5).epsilon(1e-12));
  CHECK(q.edges()[0][2] == doctest::Approx(74.25).epsilon(1e-12));
  // the constant dimension collapses to a single bucket
  CHECK(q.cell_count() == 4);
  CHECK(q.cell({10.0, 7.0}) == 0);
  CHECK(q.cell({30.0, 7.0}) == 1);
  CHECK(q.cell({60.0, 7.0}) == 2);
  CHECK(q.cell({90.0, 7.0}) == 3);
  // out-of-range values clamp into the edge buckets
  CHECK(q.cell({-50.0, 7.0}) == 0);
  CHECK(q.cell({1e9, 7.0}) == 3);

  FeatureQuantizer back = FeatureQuantizer::from_edges(q.edges());
  CHECK(back.cell({60.0, 7.0}) == q.cell({60.0, 7.0}));
  CHECK(back.cell_count() == q.cell_count());
}

TEST_CASE("training is reproducible byte for byte") {
  Registry reg = toy_registry();
  CodecSet codecs = codecs_for(reg);
  TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);
  Rng data_rng(29);
  std::vector<UtteranceRecord> records;
  for (int i = 0; i < 50; ++i) {
    LabelSet labels;
    labels[0] = MetricValue{std::string(data_rng.next_double() < 0.5 ? "Male" : "Female")};
    records.push_back(make_record("r" + std::to_string(i),
                                  {data_rng.next_normal(), data_rng.next_normal()},
                                  std::move(labels)));
  }
  TrainOptions opt;
  opt.kind = ModelKind::ConditionalBackoff;
  TrainedModel m1 = TrainedModel::train(reg, vocab, codecs, records, opt);
  TrainedModel m2 = TrainedModel::train(reg, vocab, codecs, records, opt);
  CHECK(m1.to_json_string() == m2.to_json_string());
}

TEST_CASE("model artifacts round-trip and reject the wrong vocabulary") {
  Registry reg = toy_registry();
  CodecSet codecs = codecs_for(reg);
  TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);
  Rng data_rng(41);
  std::vector<UtteranceRecord> records;
  for (int i = 0; i < 80; ++i) {
    LabelSet labels;
    if (i % 5 != 0)
      labels[0] = MetricValue{std::string(data_rng.next_double() < 0.5 ? "Male" : "Female")};
    const char* names[3] = {"Happy", "Sad", "Neutral"};
    labels[1] = MetricValue{std::string(names[data_rng.next_below(3)])};
    records.push_back(make_record("r" + std::to_string(i),
                                  {data_rng.next_normal(), data_rng.next_normal()},
                                  std::move(labels)));
  }
  TrainOptions opt;
  opt.kind = ModelKind::ConditionalBackoff;
  TrainedModel model = TrainedModel::train(reg, vocab, codecs, records, opt);

  const char* path = "/tmp/chainscore_test_model.json";
  model.save(path);
  TrainedModel loaded = TrainedModel::load(path, vocab);

  Rng rng(13);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> f{rng.next_normal(), rng.next_normal()};
    ChainSequence prefix{TokenVocabulary::kStart};
    if (rng.next_double() < 0.5) {
      int m = int(rng.next_below(2));
      prefix.push_back(vocab.metadata_token(m));
      if (rng.next_double() < 0.5)
        prefix.push_back(vocab.value_token(m, int(rng.next_below(uint64_t(vocab.value_size(m))))));
    }
    NextTokenDistribution a = model.next_dist(f, prefix);
    NextTokenDistribution b = loaded.next_dist(f, prefix);
    REQUIRE(a.probs.size() == b.probs.size());
    for (size_t t = 0; t < a.probs.size(); ++t) CHECK(a.probs[t] == b.probs[t]);
  }

  Registry other;
  other.register_metric("Gender", CategoricalKind{{"Male", "Female", "Other"}});
  other.register_metric("Emotion", CategoricalKind{{"Happy", "Sad", "Neutral"}});
  CodecSet other_codecs = codecs_for(other);
  TokenVocabulary other_vocab = TokenVocabulary::build(other, other_codecs);
  CHECK_THROWS_WITH_AS(TrainedModel::load(path, other_vocab) /* hash differs */,
                       doctest::Contains("vocabulary"), Error);
  std::remove(path);
}
