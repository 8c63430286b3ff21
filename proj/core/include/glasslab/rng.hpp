#ifndef GLASSLAB_RNG_HPP
#define GLASSLAB_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace glasslab {

// Counter-based stream: the n-th output is a fixed mix of (key, n), so
// streams with distinct keys are independent and reproducible regardless
// of interleaving. Substreams are derived by folding ids into the key,
// which is how experiments key their draws by (seed, module, chunk).
class Rng {
 public:
  Rng() : Rng(0x9e3779b97f4a7c15ull) {}
  explicit Rng(std::uint64_t key) : key_(key) {}

  static Rng keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  // Independent stream for a labelled child; does not disturb this stream.
  Rng substream(std::uint64_t id) const;
  Rng substream(std::uint64_t id_a, std::uint64_t id_b) const;

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53 random bits.
  double next_unit();
  // Uniform on (0,1); never returns 0 or 1, safe under log().
  double next_unit_open();
  // Standard normal via the polar method (second value cached).
  double next_normal();
  // Standard exponential.
  double next_exponential();
  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);
  // Poisson with the given mean (inversion below 30, PTRS rejection above).
  long next_poisson(double mean);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// 64-bit finalizer used for key derivation and stream output.
std::uint64_t mix64(std::uint64_t z);

}  // namespace glasslab

#endif
