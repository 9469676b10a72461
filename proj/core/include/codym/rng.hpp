#pragma once

#include <cstdint>
#include <vector>

#include "codym/error.hpp"

namespace codym {

// splitmix64 step; used for seeding and for deriving substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** — fixed, portable generator. All randomized results in this
// library are reproducible from a 64-bit seed on any platform, which the
// standard library distributions do not guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  // Independent substream for replicate/tree/restart `index`. Hash-derived,
  // so streams do not depend on the order in which they are consumed.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t sm = seed ^ (0xd1342543de82ef95ULL * (index + 1));
    return Rng(splitmix64(sm));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ValidationError("Rng::below: n must be positive");
    std::uint64_t x, r;
    do {
      x = next();
      r = x % n;
    } while (x - r > std::uint64_t(-1) - (n - 1));
    return r;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = std::size_t(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw ValidationError("sample_without_replacement: k exceeds population");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + std::size_t(below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace codym
