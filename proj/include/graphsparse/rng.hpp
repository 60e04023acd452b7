#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace graphsparse {

/// SplitMix64 finalizer. Used to derive independent stream seeds from
/// (base seed, index...) tuples.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(base);
  for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Random source whose output is identical on every platform.
///
/// std::mt19937_64 is fully specified by the standard, but the std
/// distributions are not, so all draws go through the helpers below.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in the closed range [lo, hi] (rejection sampling, unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit range
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % span);
  }

  /// Standard normal via Box-Muller. One normal per call; no cached spare so
  /// the engine state alone captures the stream position.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace graphsparse
