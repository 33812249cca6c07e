#include "chainscore/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "chainscore/error.hpp"
#include "chainscore/util.hpp"

namespace chainscore {

const char* transform_name(Transform t) {
  switch (t) {
    case Transform::Identity: return "identity";
    case Transform::Exponential: return "exponential";
    case Transform::AffineToRange: return "affine_to_range";
  }
  return "identity";
}

Transform transform_from_name(const std::string& name) {
  if (name == "identity") return Transform::Identity;
  if (name == "exponential") return Transform::Exponential;
  if (name == "affine_to_range") return Transform::AffineToRange;
  fail(Errc::InvalidConfig, "unknown transform '" + name + "'");
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void validate_config(const Registry& registry, const GeneratorConfig& config) {
  if (config.count < 1) fail(Errc::InvalidConfig, "record count must be positive");
  if (config.latent_dim < 1) fail(Errc::InvalidConfig, "latent dimension must be positive");
  if (config.feature_dim < 0) fail(Errc::InvalidConfig, "feature dimension cannot be negative");
  if (config.feature_noise < 0.0) fail(Errc::InvalidConfig, "feature noise cannot be negative");
  if (int(config.metrics.size()) != registry.size())
    fail(Errc::InvalidConfig, "one generation recipe per registered metric, in registry order");
  for (int j = 0; j < registry.size(); ++j) {
    const MetricGen& gen = config.metrics[size_t(j)];
    const MetricSpec& spec = registry.at(j);
    if (int(gen.loading.size()) > config.latent_dim)
      fail(Errc::InvalidConfig, "'" + spec.name + "': loading is longer than the latent vector");
    if (gen.sigma < 0.0) fail(Errc::InvalidConfig, "'" + spec.name + "': negative noise sigma");
    if (gen.missing_rate < 0.0 || gen.missing_rate >= 1.0)
      fail(Errc::InvalidConfig, "'" + spec.name + "': missing rate must be in [0, 1)");
    if (spec.is_numerical()) {
      if (!gen.label_probs.empty())
        fail(Errc::InvalidConfig, "'" + spec.name + "': label masses on a numerical metric");
      if (gen.transform == Transform::AffineToRange) {
        const NumericalKind& kind = spec.numerical();
        if (!std::isfinite(kind.lo) || !std::isfinite(kind.hi))
          fail(Errc::InvalidConfig,
               "'" + spec.name + "': affine transform needs a bounded registry range");
      }
    } else {
      size_t label_count = spec.categorical().labels.size();
      if (!gen.label_probs.empty() && gen.label_probs.size() != label_count)
        fail(Errc::InvalidConfig, "'" + spec.name + "': one bucket mass per label");
      for (double p : gen.label_probs)
        if (!(p >= 0.0)) fail(Errc::InvalidConfig, "'" + spec.name + "': negative bucket mass");
    }
  }
}

std::vector<std::vector<double>> resolve_loadings(const GeneratorConfig& config) {
  std::vector<std::vector<double>> loadings;
  for (size_t j = 0; j < config.metrics.size(); ++j) {
    std::vector<double> w = config.metrics[j].loading;
    if (w.empty()) {
      Rng rng = Rng::substream(config.seed, (uint64_t(1) << 32) + j);
      for (int l = 0; l < config.latent_dim; ++l)
        w.push_back(rng.next_normal() * config.loading_scale);
    }
    w.resize(size_t(config.latent_dim), 0.0);
    loadings.push_back(std::move(w));
  }
  return loadings;
}

}  // namespace

std::vector<UtteranceRecord> generate(const Registry& registry, const GeneratorConfig& config) {
  validate_config(registry, config);
  std::vector<std::vector<double>> loadings = resolve_loadings(config);

  // normalized cumulative bucket masses per categorical metric
  std::vector<std::vector<double>> cumulative(config.metrics.size());
  for (int j = 0; j < registry.size(); ++j) {
    if (registry.at(j).is_numerical()) continue;
    const auto& labels = registry.at(j).categorical().labels;
    std::vector<double> masses = config.metrics[size_t(j)].label_probs;
    if (masses.empty()) masses.assign(labels.size(), 1.0);
    double total = std::accumulate(masses.begin(), masses.end(), 0.0);
    if (!(total > 0.0))
      fail(Errc::InvalidConfig, "'" + registry.at(j).name + "': bucket masses sum to zero");
    double running = 0.0;
    for (double m : masses) {
      running += m / total;
      cumulative[size_t(j)].push_back(running);
    }
  }

  std::vector<UtteranceRecord> records;
  records.reserve(size_t(config.count));
  for (int i = 0; i < config.count; ++i) {
    Rng rng = Rng::substream(config.seed, uint64_t(i));
    UtteranceRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "utt-%06d", i);
    rec.id = id;

    std::vector<double> latent(size_t(config.latent_dim));
    for (double& q : latent) q = rng.next_normal();
    for (int f = 0; f < config.feature_dim; ++f)
      rec.features.push_back(latent[size_t(f % config.latent_dim)] +
                             config.feature_noise * rng.next_normal());

    for (int j = 0; j < registry.size(); ++j) {
      const MetricGen& gen = config.metrics[size_t(j)];
      const MetricSpec& spec = registry.at(j);
      double raw = gen.sigma * rng.next_normal();
      for (int l = 0; l < config.latent_dim; ++l) raw += loadings[size_t(j)][size_t(l)] * latent[size_t(l)];
      bool missing = rng.next_double() < gen.missing_rate;
      if (missing) continue;

      if (spec.is_numerical()) {
        const NumericalKind& kind = spec.numerical();
        double value = raw;
        if (gen.transform == Transform::Exponential) {
          value = std::exp(raw);
        } else if (gen.transform == Transform::AffineToRange) {
          double spread = 0.0;
          for (double w : loadings[size_t(j)]) spread += w * w;
          double std_raw = std::sqrt(spread + gen.sigma * gen.sigma);
          double mid = 0.5 * (kind.lo + kind.hi);
          double scale = std_raw > 0.0 ? (kind.hi - kind.lo) / (6.0 * std_raw) : 0.0;
          value = mid + raw * scale;
        }
        if (std::isfinite(kind.lo)) value = std::max(value, kind.lo);
        if (std::isfinite(kind.hi)) value = std::min(value, kind.hi);
        rec.labels[j] = value;
      } else {
        double spread = 0.0;
        for (double w : loadings[size_t(j)]) spread += w * w;
        double std_raw = std::sqrt(spread + gen.sigma * gen.sigma);
        double u = std_raw > 0.0 ? normal_cdf(raw / std_raw) : 0.5;
        const auto& cum = cumulative[size_t(j)];
        size_t bucket = 0;
        while (bucket + 1 < cum.size() && u >= cum[bucket]) ++bucket;
        rec.labels[j] = registry.at(j).categorical().labels[bucket];
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<std::vector<UtteranceRecord>> split(const std::vector<UtteranceRecord>& records,
                                                const std::vector<double>& ratios, uint64_t seed) {
  if (records.empty()) fail(Errc::EmptyInput, "cannot split an empty dataset");
  if (ratios.empty()) fail(Errc::BadRatios, "a split needs at least one ratio");
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) fail(Errc::BadRatios, "split ratios cannot be negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(Errc::BadRatios, "split ratios must sum to one");

  std::vector<int> indices(records.size());
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(seed);
  rng.shuffle(indices);

  // largest-remainder apportionment keeps every part within one record of
  // its ideal share
  const size_t n = records.size();
  std::vector<size_t> sizes(ratios.size());
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t p = 0; p < ratios.size(); ++p) {
    double quota = ratios[p] * double(n);
    sizes[p] = size_t(std::floor(quota));
    assigned += sizes[p];
    remainders.push_back({quota - std::floor(quota), p});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (size_t k = 0; assigned < n; ++k, ++assigned) sizes[remainders[k % remainders.size()].second] += 1;

  std::vector<std::vector<UtteranceRecord>> parts(ratios.size());
  size_t cursor = 0;
  for (size_t p = 0; p < ratios.size(); ++p) {
    for (size_t k = 0; k < sizes[p]; ++k) parts[p].push_back(records[size_t(indices[cursor++])]);
  }
  return parts;
}

}  // namespace chainscore
