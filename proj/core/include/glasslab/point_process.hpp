#ifndef GLASSLAB_POINT_PROCESS_HPP
#define GLASSLAB_POINT_PROCESS_HPP

#include <limits>
#include <stdexcept>
#include <vector>

#include "glasslab/rng.hpp"
#include "glasslab/stats.hpp"

namespace glasslab {

struct degenerate_weights_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The `count` largest points of the Poisson process on (0,inf) with mean
// measure zeta * x^(-1-zeta) dx, in strictly decreasing order.
struct DecreasingPointSequence {
  std::vector<double> points;
  double zeta = 0.0;
};

DecreasingPointSequence sample_poisson_process(double zeta, int count, Rng& rng);

// Expected sum of the points below `threshold` (the part dropped by a
// truncation at that level).
double poisson_tail_mean(double zeta, double threshold);

// Normalized decreasing weights. For the tilted sampler, `a` is the tilt
// exponent and `ess` the effective sample size of the importance resampling
// (NaN for direct samples).
struct PDWeights {
  std::vector<double> weights;
  double truncation_mass = 0.0;
  double x = 0.0;
  double a = 0.0;
  double ess = std::numeric_limits<double>::quiet_NaN();

  double sum_squares() const;
};

PDWeights sample_pd(double x, int count, Rng& rng);

struct TiltOptions {
  int batch = 512;             // base samples per importance batch
  double min_ess_ratio = 0.1;  // batch acceptance: reject below ratio * batch
  int max_batch_retries = 16;  // rejected batches are redrawn up to this many times
};

PDWeights sample_pd_tilted(double x, double a, int count, Rng& rng,
                           const TiltOptions& opt = {});

// Draws per batch are resampled from a shared importance batch; consecutive
// batches are independent. `per_batch` trades speed for dependence.
std::vector<PDWeights> sample_pd_tilted_batch(double x, double a, int count, int draws,
                                              Rng& rng, const TiltOptions& opt = {},
                                              int per_batch = 1);

// Monte Carlo estimate of E U^a for U the full sum of the process with index
// x; the truncated sum is completed by the analytic tail mean.
Estimate stable_sum_moment(double x, double a, Rng& rng, int count = 256, int draws = 4096);

}  // namespace glasslab

#endif
