#include "glasslab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace glasslab {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
}

std::uint64_t mix64(std::uint64_t z) {
  // Stafford mix13 variant of the SplitMix64 finalizer.
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

Rng Rng::keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t k = mix64(seed + kGolden);
  for (std::uint64_t id : path) {
    k = mix64(k ^ mix64(id + kGolden));
  }
  return Rng(k);
}

Rng Rng::substream(std::uint64_t id) const {
  return Rng(mix64(key_ ^ mix64(id + kGolden)));
}

Rng Rng::substream(std::uint64_t id_a, std::uint64_t id_b) const {
  return substream(id_a).substream(id_b);
}

std::uint64_t Rng::next_u64() {
  counter_ += kGolden;
  return mix64(key_ ^ mix64(counter_));
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_unit_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * next_unit_open() - 1.0;
    v = 2.0 * next_unit_open() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * f;
  has_cached_normal_ = true;
  return u * f;
}

double Rng::next_exponential() { return -std::log(next_unit_open()); }

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
  // Rejection to remove modulo bias.
  std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

long Rng::next_poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean)) {
    throw std::invalid_argument("Rng::next_poisson: mean must be finite and nonnegative");
  }
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Multiplication method.
    double limit = std::exp(-mean);
    double prod = 1.0;
    long k = -1;
    do {
      prod *= next_unit_open();
      ++k;
    } while (prod > limit);
    return k;
  }
  // PTRS transformed-rejection (Hormann, 1993).
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u = next_unit_open() - 0.5;
    double v = next_unit_open();
    double us = 0.5 - std::fabs(u);
    double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * std::log(mean) - mean - std::lgamma(k + 1.0)) {
      return static_cast<long>(k);
    }
  }
}

}  // namespace glasslab
