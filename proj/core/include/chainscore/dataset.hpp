#pragma once

#include <map>
#include <string>
#include <vector>

#include "chainscore/metric_registry.hpp"

namespace chainscore {

// One utterance: feature vector plus a partial label set. Missing metrics are
// simply absent keys, never placeholders.
struct UtteranceRecord {
  std::string id;
  std::vector<double> features;
  LabelSet labels;
};

// JSONL dataset file, one record per line:
//   {"id": "...", "features": [...], "metrics": {"name": value, ...}}
// Values are validated against the registry on read.
std::vector<UtteranceRecord> read_dataset(const std::string& path, const Registry& registry);
void write_dataset(const std::string& path, const Registry& registry,
                   const std::vector<UtteranceRecord>& records);

// Training values for codec fitting, keyed by metric index (numerical only).
std::map<int, std::vector<double>> collect_numeric_values(const Registry& registry,
                                                          const std::vector<UtteranceRecord>& records);

// Fraction of records carrying each metric.
std::vector<double> coverage(const Registry& registry, const std::vector<UtteranceRecord>& records);

}  // namespace chainscore
