#include "llmens/rng.hpp"

#include <stdexcept>

namespace llmens {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index) {
  std::uint64_t h = splitmix64(base ^ fnv1a64(tag));
  return splitmix64(h + index * 0x9e3779b97f4a7c15ull);
}

int SeededRng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

int SeededRng::pick(std::span<const int> candidates) {
  if (candidates.empty()) throw std::invalid_argument("pick: empty candidate set");
  if (candidates.size() == 1) return candidates[0];
  return candidates[uniform_int(static_cast<int>(candidates.size()))];
}

int SeededRng::sample(std::span<const double> probabilities) {
  if (probabilities.empty())
    throw std::invalid_argument("sample: empty distribution");
  const double u = uniform01();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  // Floating-point residue: the cumulative sum fell a hair short of 1.
  return static_cast<int>(probabilities.size()) - 1;
}

std::vector<int> argmax_set(std::span<const double> values) {
  std::vector<int> best;
  double max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > max) {
      max = values[i];
      best.clear();
      best.push_back(static_cast<int>(i));
    } else if (values[i] == max) {
      best.push_back(static_cast<int>(i));
    }
  }
  return best;
}

}  // namespace llmens
