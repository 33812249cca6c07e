#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chainscore/metric_registry.hpp"
#include "chainscore/tokenizer.hpp"

namespace chainscore {

// Flat token id space: [start, end, one metadata token per metric, then one
// contiguous value block per metric in canonical order]. Metadata and value
// ids never overlap, so every id has exactly one reading.
class TokenVocabulary {
 public:
  static constexpr int kStart = 0;
  static constexpr int kEnd = 1;

  enum class TokenType { Start, End, Metadata, Value };

  struct TokenInfo {
    TokenType type;
    int metric = -1;  // Metadata/Value only
    int local = -1;   // Value only: index within the metric's block
  };

  TokenVocabulary() = default;
  static TokenVocabulary build(const Registry& registry, const CodecSet& codecs);

  int size() const { return total_; }
  int metric_count() const { return static_cast<int>(value_base_.size()); }

  int metadata_token(int metric_index) const;
  int value_token(int metric_index, int local) const;
  int value_base(int metric_index) const;
  int value_size(int metric_index) const;

  TokenInfo info(int token) const;  // TokenOutOfBlock when out of range
  bool is_metadata(int token) const;
  bool is_value(int token) const;

  // Fingerprint of the full layout (metric names, kinds, edge/centroid bit
  // patterns, labels). Model artifacts store it; a mismatch at load time is a
  // hard VersionMismatch.
  uint64_t hash() const { return hash_; }

 private:
  std::vector<int> value_base_;
  std::vector<int> value_size_;
  int total_ = 2;
  uint64_t hash_ = 0;
};

}  // namespace chainscore
