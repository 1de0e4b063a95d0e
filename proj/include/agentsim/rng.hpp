#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "agentsim/errors.hpp"

namespace agentsim {

/// Deterministic random source. All randomness in the library flows through
/// this class so that a single 64-bit seed reproduces a run exactly on every
/// platform: std::mt19937_64 has a fully specified output sequence, and
/// bounded draws use Lemire's multiply-shift rejection method instead of
/// std::uniform_int_distribution (whose mapping is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform draw from [0, bound). Requires bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) fail(Errc::bad_argument, "Rng::below: bound must be > 0");
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next()) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  int below_int(int bound) {
    return static_cast<int>(below(static_cast<std::uint64_t>(bound)));
  }

  bool coin() { return below(2) == 1; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace agentsim
