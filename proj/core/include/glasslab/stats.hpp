#ifndef GLASSLAB_STATS_HPP
#define GLASSLAB_STATS_HPP

#include <cstdint>
#include <vector>

#include "glasslab/rng.hpp"

namespace glasslab {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  std::uint64_t n = 0;
};

// Streaming count/mean/M2 with an associative merge, so batches computed on
// independent streams can be combined in a fixed order.
class Accumulator {
 public:
  void add(double x);
  void merge(const Accumulator& other);
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // sample variance
  double sd() const;
  double se() const;
  Estimate estimate() const { return {mean(), se(), count()}; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Small fixed-dimension mean/covariance accumulator used by the delta-method
// standard errors. Observations may themselves be cluster means.
class VectorAccumulator {
 public:
  explicit VectorAccumulator(int dim = 0) { reset(dim); }
  void reset(int dim);
  int dim() const { return dim_; }
  void add(const double* x);
  void add(const std::vector<double>& x) { add(x.data()); }
  void merge(const VectorAccumulator& other);
  std::uint64_t count() const { return n_; }
  double mean(int i) const { return mean_[i]; }
  // Sample covariance of coordinates i and j.
  double covariance(int i, int j) const;
  // Standard error of the linear functional w'mean.
  double linear_se(const std::vector<double>& w) const;

 private:
  int dim_ = 0;
  std::uint64_t n_ = 0;
  std::vector<double> mean_;
  std::vector<double> cross_;  // upper-triangular sums of centered products
};

// --- classical tests ------------------------------------------------------

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);
double ks_statistic_uniform(std::vector<double> x);
// Survival function of the Kolmogorov distribution.
double kolmogorov_sf(double t);
double ks_two_sample_pvalue(double stat, std::size_t n, std::size_t m);
double ks_uniform_pvalue(double stat, std::size_t n);

// Regularized incomplete gamma functions.
double gamma_p(double a, double x);
double gamma_q(double a, double x);
// Upper tail of the chi-squared distribution.
double chi2_sf(double x, double df);

double normal_cdf(double x);
double normal_quantile(double p);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);
struct CorrelationCI {
  double r = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
// Fisher-z confidence interval at the given two-sided level (e.g. 0.99).
CorrelationCI correlation_ci(const std::vector<double>& x, const std::vector<double>& y,
                             double level);

// --- distance correlation --------------------------------------------------

// Doubly-centered distance matrices held so that permuted statistics can be
// recomputed without touching the raw samples again.
class DistanceCorrelation {
 public:
  DistanceCorrelation(const std::vector<std::vector<double>>& x,
                      const std::vector<std::vector<double>>& y);
  std::size_t size() const { return n_; }
  double observed() const { return observed_; }
  // dCor with rows/cols of the Y matrix permuted.
  double permuted(const std::vector<std::uint32_t>& perm) const;
  bool degenerate() const { return degenerate_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;  // centered |x_i - x_j|
  std::vector<double> b_;  // centered |y_i - y_j|
  double dvar_x_ = 0.0;
  double dvar_y_ = 0.0;
  double observed_ = 0.0;
  bool degenerate_ = false;
};

// Permutation p-value with uniform tie smoothing: exactly Uniform(0,1) under
// exchangeability of the observed statistic with the permuted ones.
double smoothed_permutation_pvalue(double observed, const std::vector<double>& permuted,
                                   Rng& rng);

struct PermutationTestResult {
  double p_value = 1.0;
  bool completed = true;  // false when early-stopped (p_value is a lower bound)
  int permutations_used = 0;
};

}  // namespace glasslab

#endif
