#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace idfield {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Counter-free xoshiro256** stream. Streams are derived by hashing a key
/// tuple (root seed, domain tag, cell index, replicate, ...), so draws are
/// independent of scheduling and iteration order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = x = splitmix64(x);
  }

  /// Child stream keyed by up to four indices. Same key, same stream.
  RngStream derive(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0, std::uint64_t d = 0) const {
    std::uint64_t h = splitmix64(state_[0] ^ splitmix64(a));
    h = splitmix64(h ^ splitmix64(b ^ 0x517cc1b727220a95ull));
    h = splitmix64(h ^ splitmix64(c ^ 0x2545f4914f6cdd1dull));
    h = splitmix64(h ^ splitmix64(d ^ 0x9e3779b97f4a7c15ull));
    return RngStream(h);
  }

  std::uint64_t next_u64() {
    auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in (0,1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal, Box-Muller (stateless across calls apart from the
  /// cached spare, which lives in this stream only).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Poisson count by inversion; adequate for the mean ranges used here.
  long poisson(double mean) {
    if (mean < 0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0) return 0;
    if (mean > 5.0e5) throw std::invalid_argument("poisson: mean too large for inversion sampler");
    // Split large means into chunks to keep exp(-mean) representable.
    long total = 0;
    double remaining = mean;
    while (remaining > 500.0) {
      total += poisson(500.0);
      remaining -= 500.0;
    }
    double L = std::exp(-remaining);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > L);
    total += k - 1;
    return total;
  }

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace idfield
