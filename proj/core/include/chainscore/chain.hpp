#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "chainscore/metric_registry.hpp"
#include "chainscore/tokenizer.hpp"
#include "chainscore/vocabulary.hpp"

namespace chainscore {

// Full framed token sequence: start, (metadata, value)*, end.
using ChainSequence = std::vector<int>;

struct RandomPermutation {
  uint64_t seed = 0;
};

// A full static order. Must cover every labelled metric; listed metrics with
// no label are skipped silently.
struct FixedOrder {
  std::vector<int> metrics;
};

// Static order over a subset: labelled metrics missing from the list are
// dropped too (intersection convention), which is what preset files use.
struct SubsetFixedOrder {
  std::vector<int> metrics;
};

using OrderPolicy = std::variant<RandomPermutation, FixedOrder, SubsetFixedOrder>;

struct ParsedChain {
  LabelSet labels;                  // decoded values (centroids / labels)
  std::map<int, int> value_tokens;  // metric index -> value token id
  std::vector<int> order;           // metric visit order
};

// Uniform random permutation of the given metrics, deterministic in seed.
std::vector<int> random_order(std::vector<int> metrics, uint64_t seed);

// Encodes a partial label set into a chain. Labels must be non-empty and
// valid for the registry; policy lists may only name registered metrics, no
// duplicates.
ChainSequence build_target(const Registry& registry, const TokenVocabulary& vocab,
                           const CodecSet& codecs, const LabelSet& labels,
                           const OrderPolicy& policy);

// Strict inverse of build_target at token resolution. MalformedSequence on
// any framing/alternation/block violation or a metric visited twice.
ParsedChain parse(const Registry& registry, const TokenVocabulary& vocab, const CodecSet& codecs,
                  const ChainSequence& seq);

// Order preset file: plain text, one metric name per line; '#' comments and
// blank lines ignored.
std::vector<std::string> read_order_file(const std::string& path);

// Maps names to registry indices. With skip_unknown, unregistered names drop
// out (presets list a wider metric universe than most registries).
std::vector<int> resolve_order(const Registry& registry, const std::vector<std::string>& names,
                               bool skip_unknown);

}  // namespace chainscore
