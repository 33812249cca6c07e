#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chainscore {

// FNV-1a 64-bit, used for config/input/vocabulary fingerprints.
uint64_t fnv1a64(std::string_view bytes);
std::string hex64(uint64_t v);

// Deterministic RNG. splitmix64 core with a Box-Muller normal; std::
// distributions are implementation-defined, and reruns must be byte-identical.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Independent substream for (seed, index), used for per-record draws.
  static Rng substream(uint64_t seed, uint64_t index);

  uint64_t next_u64();
  double next_double();                  // [0, 1)
  double next_normal();                  // N(0, 1)
  uint64_t next_below(uint64_t bound);   // [0, bound), unbiased
  // Fisher-Yates.
  void shuffle(std::vector<int>& items);

 private:
  uint64_t state_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Quantile of a sorted sample with linear interpolation at p*(n-1).
double sorted_quantile(const std::vector<double>& sorted, double p);

// Shortest round-trip decimal form of a double (stable across reruns).
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace chainscore
