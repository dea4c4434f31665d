// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace dse::rng {

// Deterministic random stream. Every stream is derived from an explicit key,
// typically (seed, frame_id, model_id), so simulation results never depend on
// thread scheduling or iteration order. Standard-library distributions are
// avoided on purpose: their output is implementation-defined.
class Stream {
public:
  explicit Stream(std::uint64_t key) : state_(key) {}

  // FNV-1a over the seed and key strings, then a splitmix finalizer.
  static Stream keyed(std::uint64_t seed, std::string_view a,
                      std::string_view b = {}) {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix_byte = [&h](unsigned char c) {
      h ^= c;
      h *= 1099511628211ULL;
    };
    for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(seed >> (8 * i)));
    mix_byte(0x1f);
    for (char c : a) mix_byte(static_cast<unsigned char>(c));
    mix_byte(0x1f);
    for (char c : b) mix_byte(static_cast<unsigned char>(c));
    Stream s(h);
    s.next_u64();
    return s;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Unbiased integer in [0, bound) via rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % bound;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % bound;
  }

  bool bernoulli(double p) { return next_unit() < p; }

  // Box-Muller; consumes two draws per call, no cached spare.
  double normal(double mean, double stddev) {
    const double u1 = 1.0 - next_unit();  // (0, 1]
    const double u2 = next_unit();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * mag * std::cos(6.283185307179586476925287 * u2);
  }

  // Knuth's product method; fine for the small rates used here.
  int poisson(double rate) {
    if (rate <= 0.0) return 0;
    const double limit = std::exp(-rate);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= next_unit();
    } while (p > limit);
    return k - 1;
  }

private:
  std::uint64_t state_;
};

}  // namespace dse::rng
