#include "chainscore/util.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chainscore/error.hpp"

namespace chainscore {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::InvalidKind: return "InvalidKind";
    case Errc::UnknownMetric: return "UnknownMetric";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::NonFinite: return "NonFinite";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::TooFewBins: return "TooFewBins";
    case Errc::DegenerateSample: return "DegenerateSample";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::TokenOutOfBlock: return "TokenOutOfBlock";
    case Errc::ArtifactMismatch: return "ArtifactMismatch";
    case Errc::EmptyLabels: return "EmptyLabels";
    case Errc::UnknownMetricInPolicy: return "UnknownMetricInPolicy";
    case Errc::DuplicatePolicyMetric: return "DuplicatePolicyMetric";
    case Errc::StaticOrderIncomplete: return "StaticOrderIncomplete";
    case Errc::Malformed: return "Malformed";
    case Errc::MalformedPrefix: return "MalformedPrefix";
    case Errc::MalformedSequence: return "MalformedSequence";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::CorruptArtifact: return "CorruptArtifact";
    case Errc::BadSmoothing: return "BadSmoothing";
    case Errc::MetricAlreadyDecided: return "MetricAlreadyDecided";
    case Errc::EmptyQuery: return "EmptyQuery";
    case Errc::BadBeamWidth: return "BadBeamWidth";
    case Errc::MissingGroundTruth: return "MissingGroundTruth";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::BadRatios: return "BadRatios";
    case Errc::EmptySeries: return "EmptySeries";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NothingToAggregate: return "NothingToAggregate";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Error";
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

Rng Rng::substream(uint64_t seed, uint64_t index) {
  // decorrelate (seed, index) pairs by hashing both through the mixer
  uint64_t s = seed;
  uint64_t a = splitmix64(s);
  s = a ^ (index * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull);
  uint64_t b = splitmix64(s);
  return Rng(b);
}

uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::next_double() {
  // top 53 bits -> [0, 1)
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller on (0,1] x [0,1)
  double u1 = 0.0;
  while (u1 == 0.0) u1 = next_double();
  double u2 = next_double();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * 3.14159265358979323846 * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

uint64_t Rng::next_below(uint64_t bound) {
  if (bound == 0) fail(Errc::EmptyInput, "next_below(0)");
  // rejection sampling to stay unbiased
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

void Rng::shuffle(std::vector<int>& items) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = next_below(i);
    std::swap(items[i - 1], items[j]);
  }
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) fail(Errc::EmptyInput, "quantile of an empty sample");
  if (sorted.size() == 1) return sorted[0];
  double pos = p * double(sorted.size() - 1);
  size_t lo = size_t(pos);
  if (lo >= sorted.size() - 1) return sorted.back();
  double frac = pos - double(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) fail(Errc::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) fail(Errc::IoError, "cannot write " + path);
  out << content;
  if (!out.good()) fail(Errc::IoError, "write to " + path + " failed");
}

}  // namespace chainscore
