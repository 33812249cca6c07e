#include "chainscore/vocabulary.hpp"

#include <cstring>

#include "chainscore/error.hpp"
#include "chainscore/util.hpp"

namespace chainscore {

namespace {

void hash_double(std::string& buf, double v) {
  // hash the bit pattern, not a decimal rendering
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  buf += hex64(bits);
  buf += ';';
}

}  // namespace

TokenVocabulary TokenVocabulary::build(const Registry& registry, const CodecSet& codecs) {
  TokenVocabulary vocab;
  int k = registry.size();
  if (k == 0) fail(Errc::EmptyInput, "cannot build a vocabulary from an empty registry");

  std::string fingerprint;
  int next = 2 + k;
  for (const MetricSpec& spec : registry.metrics()) {
    int size = codecs.value_count(spec.index);
    vocab.value_base_.push_back(next);
    vocab.value_size_.push_back(size);
    next += size;

    fingerprint += spec.name;
    fingerprint += '|';
    if (spec.is_numerical()) {
      const NumericCodec& codec = codecs.numeric.at(spec.index);
      fingerprint += strategy_name(codec.strategy());
      fingerprint += ';';
      fingerprint += std::to_string(codec.requested_bins());
      fingerprint += ';';
      hash_double(fingerprint, codec.clamp_lo());
      hash_double(fingerprint, codec.clamp_hi());
      for (double e : codec.boundaries().edges) hash_double(fingerprint, e);
      fingerprint += '/';
      for (double c : codec.boundaries().centroids) hash_double(fingerprint, c);
    } else {
      for (const std::string& label : codecs.categorical.at(spec.index).labels()) {
        fingerprint += label;
        fingerprint += ';';
      }
    }
    fingerprint += '\n';
  }
  vocab.total_ = next;
  vocab.hash_ = fnv1a64(fingerprint);
  return vocab;
}

int TokenVocabulary::metadata_token(int metric_index) const {
  if (metric_index < 0 || metric_index >= metric_count())
    fail(Errc::UnknownMetric, "no metric with index " + std::to_string(metric_index));
  return 2 + metric_index;
}

int TokenVocabulary::value_token(int metric_index, int local) const {
  if (local < 0 || local >= value_size(metric_index))
    fail(Errc::TokenOutOfBlock, "local value " + std::to_string(local) + " outside block of " +
                                    std::to_string(value_size(metric_index)));
  return value_base_[size_t(metric_index)] + local;
}

int TokenVocabulary::value_base(int metric_index) const {
  if (metric_index < 0 || metric_index >= metric_count())
    fail(Errc::UnknownMetric, "no metric with index " + std::to_string(metric_index));
  return value_base_[size_t(metric_index)];
}

int TokenVocabulary::value_size(int metric_index) const {
  if (metric_index < 0 || metric_index >= metric_count())
    fail(Errc::UnknownMetric, "no metric with index " + std::to_string(metric_index));
  return value_size_[size_t(metric_index)];
}

TokenVocabulary::TokenInfo TokenVocabulary::info(int token) const {
  if (token == kStart) return {TokenType::Start, -1, -1};
  if (token == kEnd) return {TokenType::End, -1, -1};
  int k = metric_count();
  if (token >= 2 && token < 2 + k) return {TokenType::Metadata, token - 2, -1};
  for (int m = 0; m < k; ++m) {
    int base = value_base_[size_t(m)];
    if (token >= base && token < base + value_size_[size_t(m)])
      return {TokenType::Value, m, token - base};
  }
  fail(Errc::TokenOutOfBlock, "token " + std::to_string(token) + " outside the vocabulary");
}

bool TokenVocabulary::is_metadata(int token) const {
  return token >= 2 && token < 2 + metric_count();
}

bool TokenVocabulary::is_value(int token) const {
  return token >= 2 + metric_count() && token < total_;
}

}  // namespace chainscore
