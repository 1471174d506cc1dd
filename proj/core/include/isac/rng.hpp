#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace isac {

/// SplitMix64 finalizer; a bijective mix of one 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based substream seed: hash(master, tag_0, tag_1, ...). Streams for
/// different tag tuples are independent, and adding new tags never perturbs
/// existing streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

/// Stream tags used across generators, so unrelated draws never share a stream.
enum class Stream : std::uint64_t {
  kSymbols = 1,
  kChannel = 2,
  kEchoNoise = 3,
  kMask = 4,
  kScene = 5,
};

constexpr std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
  return derive_seed(seed, {static_cast<std::uint64_t>(s)});
}

using Rng = std::mt19937_64;

/// Circularly-symmetric complex Gaussian CN(mean, variance).
inline std::complex<double> complex_normal(Rng& rng, std::complex<double> mean, double variance) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  const double re = n(rng);
  const double im = n(rng);
  return mean + std::complex<double>(s * re, s * im);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace isac
