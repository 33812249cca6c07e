#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chainscore/dataset.hpp"
#include "chainscore/metric_registry.hpp"

namespace chainscore {

enum class Transform { Identity, Exponential, AffineToRange };

const char* transform_name(Transform t);
Transform transform_from_name(const std::string& name);

// Per-metric generation recipe, aligned with the registry's canonical order.
struct MetricGen {
  std::vector<double> loading;     // latent weights; empty -> seeded random * loading_scale
  double sigma = 0.5;              // observation noise
  Transform transform = Transform::Identity;
  double missing_rate = 0.0;       // independent per record, in [0, 1)
  std::vector<double> label_probs; // categorical: bucket mass; empty -> equiprobable
};

struct GeneratorConfig {
  int count = 0;
  int latent_dim = 1;
  int feature_dim = 2;
  double loading_scale = 1.0;
  double feature_noise = 0.05;
  uint64_t seed = 0;
  std::vector<MetricGen> metrics;
};

// Shared-latent generator: q ~ N(0,1)^d per record, features = A q + noise,
// numerical metric j = transform(w_j . q + eps_j) clamped into the registry
// range, categorical = bucketed projection. Missingness is independent per
// metric, drawn from a per-record substream of the seed. Deterministic.
std::vector<UtteranceRecord> generate(const Registry& registry, const GeneratorConfig& config);

// Seeded shuffle, then largest-remainder partition: ratios (0.8, 0.1, 0.1)
// over 1000 records give exactly 800/100/100.
std::vector<std::vector<UtteranceRecord>> split(const std::vector<UtteranceRecord>& records,
                                                const std::vector<double>& ratios, uint64_t seed);

}  // namespace chainscore
