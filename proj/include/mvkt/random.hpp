#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "mvkt/tensor.hpp"

namespace mvkt {

using Rng = std::mt19937_64;

// FNV-1a, stable across platforms and runs.
constexpr std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for (base seed, purpose tag, optional key). Streams
// keyed by name stay fixed when unrelated streams are added or reordered.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                    std::string_view key = {}) {
  return splitmix64(base ^ splitmix64(fnv1a(key, fnv1a(tag))));
}

inline Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t = Tensor::matrix(fan_in, fan_out);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace mvkt
