#include "chainscore/chain.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "chainscore/error.hpp"
#include "chainscore/util.hpp"

namespace chainscore {

std::vector<int> random_order(std::vector<int> metrics, uint64_t seed) {
  if (metrics.empty()) fail(Errc::EmptyInput, "nothing to order");
  Rng rng(seed);
  rng.shuffle(metrics);
  return metrics;
}

namespace {

// Shared policy-list validation: known metrics only, listed once each.
void validate_policy_list(const Registry& registry, const std::vector<int>& metrics) {
  std::set<int> seen;
  for (int m : metrics) {
    if (m < 0 || m >= registry.size())
      fail(Errc::UnknownMetricInPolicy, "order lists unknown metric index " + std::to_string(m));
    if (!seen.insert(m).second)
      fail(Errc::DuplicatePolicyMetric,
           "order lists '" + registry.at(m).name + "' more than once");
  }
}

std::vector<int> resolve_policy(const Registry& registry, const LabelSet& labels,
                                const OrderPolicy& policy) {
  if (const auto* random = std::get_if<RandomPermutation>(&policy)) {
    std::vector<int> metrics;
    for (const auto& [m, value] : labels) metrics.push_back(m);
    return random_order(std::move(metrics), random->seed);
  }
  if (const auto* fixed = std::get_if<FixedOrder>(&policy)) {
    validate_policy_list(registry, fixed->metrics);
    std::vector<int> order;
    for (int m : fixed->metrics)
      if (labels.count(m)) order.push_back(m);
    if (order.size() != labels.size()) {
      for (const auto& [m, value] : labels)
        if (std::find(fixed->metrics.begin(), fixed->metrics.end(), m) == fixed->metrics.end())
          fail(Errc::StaticOrderIncomplete,
               "order does not cover labelled metric '" + registry.at(m).name + "'");
    }
    return order;
  }
  const auto& subset = std::get<SubsetFixedOrder>(policy);
  validate_policy_list(registry, subset.metrics);
  std::vector<int> order;
  for (int m : subset.metrics)
    if (labels.count(m)) order.push_back(m);
  if (order.empty())
    fail(Errc::EmptyLabels, "order shares no metric with the label set");
  return order;
}

}  // namespace

ChainSequence build_target(const Registry& registry, const TokenVocabulary& vocab,
                           const CodecSet& codecs, const LabelSet& labels,
                           const OrderPolicy& policy) {
  if (labels.empty()) fail(Errc::EmptyLabels, "cannot build a chain from no labels");
  for (const auto& [m, value] : labels) registry.validate_value(m, value);

  std::vector<int> order = resolve_policy(registry, labels, policy);
  ChainSequence seq{TokenVocabulary::kStart};
  for (int m : order) {
    seq.push_back(vocab.metadata_token(m));
    seq.push_back(vocab.value_token(m, codecs.encode_value(m, labels.at(m))));
  }
  seq.push_back(TokenVocabulary::kEnd);
  return seq;
}

ParsedChain parse(const Registry& registry, const TokenVocabulary& vocab, const CodecSet& codecs,
                  const ChainSequence& seq) {
  (void)registry;
  auto malformed = [&](const std::string& why) {
    fail(Errc::MalformedSequence, why);
  };
  if (seq.size() < 2) malformed("shorter than [start, end]");
  if (seq.front() != TokenVocabulary::kStart) malformed("does not begin with the start token");

  ParsedChain out;
  std::set<int> visited;
  size_t i = 1;
  while (i < seq.size() && seq[i] != TokenVocabulary::kEnd) {
    int meta = seq[i];
    if (!vocab.is_metadata(meta)) malformed("expected a metadata token at position " +
                                            std::to_string(i));
    int metric = vocab.info(meta).metric;
    if (!visited.insert(metric).second) malformed("metric visited twice");
    if (i + 1 >= seq.size()) malformed("metadata token with no value");
    int value = seq[i + 1];
    if (!vocab.is_value(value)) malformed("expected a value token at position " +
                                          std::to_string(i + 1));
    TokenVocabulary::TokenInfo info = vocab.info(value);
    if (info.metric != metric) malformed("value token outside the announced metric's block");

    out.labels[metric] = codecs.decode_value(metric, info.local);
    out.value_tokens[metric] = value;
    out.order.push_back(metric);
    i += 2;
  }
  if (i >= seq.size()) malformed("missing the end token");
  if (i + 1 != seq.size()) malformed("tokens after the end token");
  return out;
}

std::vector<std::string> read_order_file(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    size_t last = line.find_last_not_of(" \t\r");
    std::string name = line.substr(first, last - first + 1);
    if (name[0] == '#') continue;
    names.push_back(std::move(name));
  }
  return names;
}

std::vector<int> resolve_order(const Registry& registry, const std::vector<std::string>& names,
                               bool skip_unknown) {
  std::vector<int> order;
  std::set<int> seen;
  for (const std::string& name : names) {
    std::optional<int> m = registry.find(name);
    if (!m) {
      if (skip_unknown) continue;
      fail(Errc::UnknownMetricInPolicy, "order names unregistered metric '" + name + "'");
    }
    if (!seen.insert(*m).second)
      fail(Errc::DuplicatePolicyMetric, "order names '" + name + "' more than once");
    order.push_back(*m);
  }
  return order;
}

}  // namespace chainscore
