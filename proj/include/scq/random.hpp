#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace scq {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed derivation: the seed for (master, stream, substream)
/// depends only on those three values, never on how many other streams
/// exist or in what order they were created.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t substream = 0) {
  return mix64(mix64(mix64(master) ^ stream) ^ (substream * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t substream = 0) {
  return Rng(derive_seed(master, stream, substream));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Index of the maximum of value(0..n-1). Comparison is strict with no
/// tolerance; among exact ties one index is drawn uniformly. The random
/// source is consumed only when there is more than one maximizer.
template <class ValueFn>
std::size_t argmax_uniform_ties(std::size_t n, ValueFn&& value, Rng& rng) {
  if (n == 0) throw std::invalid_argument("argmax over an empty range");
  double best = value(0);
  std::size_t best_index = 0;
  std::size_t ties = 1;
  for (std::size_t i = 1; i < n; ++i) {
    const double v = value(i);
    if (v > best) {
      best = v;
      best_index = i;
      ties = 1;
    } else if (v == best) {
      ++ties;
    }
  }
  if (ties == 1) return best_index;
  std::size_t pick = uniform_index(rng, ties);
  for (std::size_t i = best_index; i < n; ++i) {
    if (value(i) == best) {
      if (pick == 0) return i;
      --pick;
    }
  }
  return best_index;  // unreachable
}

inline std::size_t argmax_uniform_ties(std::span<const double> values, Rng& rng) {
  return argmax_uniform_ties(values.size(), [&](std::size_t i) { return values[i]; }, rng);
}

}  // namespace scq
