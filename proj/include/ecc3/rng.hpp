#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ecc3/error.hpp"

namespace ecc3 {

// Deterministic random source. All distributions are implemented by hand on
// top of std::mt19937_64 so that a given seed produces the same stream on
// every platform (the std <random> distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1); rejects exact zeros so logs are safe.
  double next_unit_open() {
    double u;
    do {
      u = next_unit();
    } while (u <= 0.0);
    return u;
  }

  // Unbiased integer in [0, bound) by rejection sampling.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw_invalid("Rng::next_below: bound must be positive");
    const std::uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double next_gamma(double shape) {
    if (!(shape > 0.0)) throw_invalid("Rng::next_gamma: shape must be > 0");
    if (shape < 1.0) {
      const double u = next_unit_open();
      return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = next_normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = next_unit_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Identity permutation of n indices, shuffled.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ecc3
