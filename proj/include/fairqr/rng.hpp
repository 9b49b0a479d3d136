#pragma once

// Counter-based pseudo-random generator for the benchmark harness. Every
// draw is a pure function of (key, counter), so trials can be seeded
// independently, replayed bit for bit, and split into decorrelated
// sub-streams without sharing state.
//
// Stream derivation rule (all constants are fixed arbitrary odd tags):
//   key        = mix64(seed ^ kSeedTag)
//   output(i)  = mix64(key + i * kGolden)          for i = 1, 2, ...
//   substream  = key' = mix64(key ^ mix64(salt ^ kStreamTag)), counter reset
// mix64 is the splitmix64 finalizer, a 64-bit bijection.

#include <cmath>
#include <cstdint>

namespace fairqr {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix64(seed ^ kSeedTag)) {}

  // Independent stream addressed by salt; deterministic in (seed, salt).
  CounterRng derive_stream(std::uint64_t salt) const {
    return CounterRng(raw_key_tag{}, mix64(key_ ^ mix64(salt ^ kStreamTag)));
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool next_bernoulli(double probability) { return next_unit() < probability; }

  // Standard normal via the polar method; the counter advances by however
  // many uniforms the rejection loop consumed, which is itself a
  // deterministic function of the stream.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    has_cached_ = true;
    return u * f;
  }

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

 private:
  struct raw_key_tag {};
  CounterRng(raw_key_tag, std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kSeedTag = 0x5851F42D4C957F2Dull;
  static constexpr std::uint64_t kStreamTag = 0xDA942042E4DD58B5ull;

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace fairqr
