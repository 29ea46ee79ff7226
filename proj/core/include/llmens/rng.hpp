#ifndef LLMENS_RNG_HPP
#define LLMENS_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace llmens {

// 64-bit FNV-1a. Used for stream tags, cache keys and catalog hashes;
// not cryptographic.
std::uint64_t fnv1a64(std::string_view data);

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent seed for a named stream. Streams with different
// tags or indices never collide in practice; the same (base, tag, index)
// always yields the same seed.
std::uint64_t stream_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index = 0);

// Deterministic RNG with self-contained draw helpers so results do not
// depend on the standard library's distribution implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1), 53 bits of precision.
  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  int uniform_int(int n);

  // Uniform pick from a non-empty index set. Single element: no draw,
  // which keeps RNG streams aligned between tied and untied call sites.
  int pick(std::span<const int> candidates);

  // Samples an index from a probability vector by inverse CDF.
  int sample(std::span<const double> probabilities);

 private:
  std::mt19937_64 engine_;
};

// Indices attaining the exact maximum of a row.
std::vector<int> argmax_set(std::span<const double> values);

}  // namespace llmens

#endif
