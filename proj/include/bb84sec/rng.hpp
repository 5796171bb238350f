#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>

namespace bb84sec {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stateless draw keyed by (seed, stream, index, slot). Any draw can be
// reproduced without replaying the ones before it.
constexpr std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                                   std::uint64_t slot) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (stream * 0xd1b54a32d192ed03ULL));
  h = splitmix64(h ^ (index * 0xabc98388fb8fac03ULL));
  return splitmix64(h ^ (slot * 0x8cb92ba72f3d8dd7ULL));
}

constexpr double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Counter-based generator for one stream: draw(index, slot).
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  constexpr std::uint64_t bits(std::uint64_t index, std::uint64_t slot) const {
    return keyed_bits(seed_, stream_, index, slot);
  }
  constexpr double uniform(std::uint64_t index, std::uint64_t slot) const { return to_unit(bits(index, slot)); }

 private:
  std::uint64_t seed_, stream_;
};

// Sequential view of one stream; satisfies UniformRandomBitGenerator.
class StreamEngine {
 public:
  using result_type = std::uint64_t;

  constexpr StreamEngine(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() { return rng_.bits(counter_++, 0); }
  constexpr double uniform() { return to_unit((*this)()); }

  // Uniform integer in [0, n), by rejection so every platform agrees.
  constexpr std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("below(0)");
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x = (*this)();
    while (x >= limit) x = (*this)();
    return x % n;
  }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace bb84sec
