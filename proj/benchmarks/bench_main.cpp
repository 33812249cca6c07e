// Microbenchmarks for the hot paths: codec fitting and encoding, rank
// correlation, and beam decoding.
#include <benchmark/benchmark.h>

#include <vector>

#include "chainscore/dataset.hpp"
#include "chainscore/decoder.hpp"
#include "chainscore/eval.hpp"
#include "chainscore/metric_registry.hpp"
#include "chainscore/sequence_model.hpp"
#include "chainscore/synthetic.hpp"
#include "chainscore/tokenizer.hpp"
#include "chainscore/util.hpp"
#include "chainscore/vocabulary.hpp"

namespace {

using namespace chainscore;

struct Bench {
  Registry registry;
  std::vector<UtteranceRecord> records;
  CodecSet codecs;
  TokenVocabulary vocab;
  TrainedModel model;
};

const Bench& bench() {
  static Bench* b = [] {
    Registry reg;
    reg.register_metric("mos", NumericalKind{1.0, 5.0, Direction::HigherBetter});
    reg.register_metric("stoi", NumericalKind{0.0, 1.0, Direction::HigherBetter});
    reg.register_metric("snr", NumericalKind{0.0, 40.0, Direction::HigherBetter});
    reg.register_metric("gender", CategoricalKind{{"Male", "Female"}});

    GeneratorConfig gen;
    gen.count = 2000;
    gen.latent_dim = 2;
    gen.feature_dim = 2;
    gen.seed = 99;
    for (int m = 0; m < 4; ++m) {
      MetricGen g;
      g.loading = {1.0 - 0.15 * m, 0.2 * m};
      g.sigma = 0.3 + 0.05 * m;
      if (m < 3) g.transform = Transform::AffineToRange;
      gen.metrics.push_back(g);
    }
    std::vector<UtteranceRecord> records = generate(reg, gen);
    CodecSet codecs = fit_codec_set(reg, collect_numeric_values(reg, records),
                                    BinStrategy::Percentile, 64);
    TokenVocabulary vocab = TokenVocabulary::build(reg, codecs);
    TrainOptions opt;
    TrainedModel model = TrainedModel::train(reg, vocab, codecs, records, opt);
    return new Bench{std::move(reg), std::move(records), std::move(codecs), std::move(vocab),
                     std::move(model)};
  }();
  return *b;
}

std::vector<double> random_series(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& v : out) v = rng.next_normal();
  return out;
}

void BM_percentile_fit(benchmark::State& state) {
  std::vector<double> samples = random_series(size_t(state.range(0)), 7);
  for (auto _ : state) {
    NumericCodec codec = NumericCodec::fit_percentile("mos", samples, 256);
    benchmark::DoNotOptimize(codec);
  }
}
BENCHMARK(BM_percentile_fit)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_encode(benchmark::State& state) {
  std::vector<double> samples = random_series(10000, 11);
  NumericCodec codec = NumericCodec::fit_percentile("mos", samples, 256);
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(codec.encode(samples[i]));
    if (++i == samples.size()) i = 0;
  }
}
BENCHMARK(BM_encode);

void BM_kendall_tau(benchmark::State& state) {
  size_t n = size_t(state.range(0));
  std::vector<double> x = random_series(n, 3), y = random_series(n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau_b(x, y));
}
BENCHMARK(BM_kendall_tau)->Arg(100)->Arg(1000);

void BM_dynamic_decode(benchmark::State& state) {
  const Bench& b = bench();
  DecodeRequest req;
  for (int m = 0; m < b.registry.size(); ++m) req.query.push_back(m);
  req.beam = int(state.range(0));
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        decode(b.model, b.registry, b.codecs, b.records[i].features, req));
    if (++i == b.records.size()) i = 0;
  }
}
BENCHMARK(BM_dynamic_decode)->Arg(1)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
