#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>

#include "kgraph/common.hpp"

namespace kgraph {

// Counter-based splittable random stream. The state is a (key, counter) pair;
// output i is a strong 64-bit mix of key + i, so streams can be replayed and
// split without touching each other. Every randomized routine in the library
// takes one of these explicitly; given the same seed the whole pipeline is
// reproducible bit for bit.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_(mix(mix(seed + kGolden) ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next_u64() { return mix(key_ + kGolden * ++counter_); }

  // Uniform in [0, 1), 53 bits of precision.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n) without modulo bias (Lemire's method).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw input_error("uniform_index: n must be positive");
    std::uint64_t range = static_cast<std::uint64_t>(n);
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * range;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low < range) {
      std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<unsigned __int128>(x) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  // Standard normal via Box-Muller; keeps the spare deterministic in-stream.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Independent child stream; lanes with distinct ids never collide.
  RngStream split(std::uint64_t lane) const {
    RngStream child;
    child.key_ = mix(key_ ^ mix(lane + 0x9e3779b97f4a7c15ULL));
    child.counter_ = 0;
    child.has_spare_ = false;
    return child;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kgraph
