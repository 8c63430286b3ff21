#ifndef GLASSLAB_EXCHANGEABILITY_HPP
#define GLASSLAB_EXCHANGEABILITY_HPP

#include <memory>
#include <string>
#include <vector>

#include "glasslab/cascade.hpp"
#include "glasslab/sources.hpp"
#include "glasslab/stats.hpp"
#include "glasslab/tree.hpp"

namespace glasslab {

struct degenerate_statistic_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- exchangeable spin generation -------------------------------------------

// Built-in parametric kernels sigma(w,u,v) in [-1,1].
struct SigmaKernel {
  enum class Family { constant, logistic, bump };
  Family family = Family::constant;
  double p1 = 0.0;  // constant level / coupling gain
  double p2 = 0.0;  // global-randomness gain
  double p3 = 0.0;  // bump sharpness

  double eval(double w, double u, double v) const;
};

struct SpinArray {
  int n = 0;  // replicas
  int m = 0;  // coordinates
  std::vector<std::int8_t> s;
  std::int8_t at(int replica, int i) const {
    return s[static_cast<std::size_t>(replica) * m + i];
  }
};

// Row/column/cell layering: one global uniform, one per replica, one per
// coordinate, one coin per pair.
SpinArray generate_spins(const SigmaKernel& kernel, int n_replicas, int m, Rng& rng);
// Same with the global and replica uniforms pinned (oracle hook).
SpinArray generate_spins_given(const SigmaKernel& kernel, double w,
                               const std::vector<double>& us, int m, Rng& rng);

// --- pure-state arrays -------------------------------------------------------

// N replica spin rows per leaf of the d-regular depth-r tree.
struct PureStateSpinArray {
  int d = 0, r = 0, n = 0, m = 0;
  std::vector<std::int8_t> s;  // leaf-major, then replica, then coordinate

  std::int8_t at(int leaf, int replica, int i) const {
    return s[(static_cast<std::size_t>(leaf) * n + replica) * m + i];
  }
  int leaf_count() const;
};

// Spins of one state generated from the path noise: magnetization from the
// kernel, coins from the leaf-level noise at flattened (replica, coordinate)
// indices, so the whole array is a fixed function of the noise field.
PureStateSpinArray generate_hierarchical_spins(const HierarchicalKernel& kernel,
                                               const NoiseField& noise, int d, int n_replicas,
                                               int m);

std::vector<double> magnetization(const PureStateSpinArray& arr, int leaf);
double multi_overlap(const std::vector<std::vector<double>>& mags);

// Conditioned sampling: replicas drawn from the cascade until every leaf has
// at least N hits (cap per attempt, fresh build on restart).
struct PureStateSample {
  PureStateSpinArray spins;
  std::vector<double> leaf_masses;  // kept V per leaf, leaf-id order
  std::vector<double> top_weights;  // sorted decreasing
  int restarts = 0;
  std::uint64_t draws_used = 0;
  double residual = 0.0;
};

PureStateSample sample_pure_states(const CascadeParams& params, const HierarchicalKernel& kernel,
                                   int n_replicas, int m, std::uint64_t cap_draws,
                                   int max_restarts, Rng& rng);

// --- hierarchical exchangeability test ---------------------------------------

// One scalar per leaf of [d]^r, leaf-id order.
class LeafArraySource {
 public:
  virtual ~LeafArraySource() = default;
  virtual std::unique_ptr<LeafArraySource> clone() const = 0;
  virtual int d() const = 0;
  virtual int r() const = 0;
  virtual void draw(Rng& rng, std::vector<double>& out) = 0;
};

// Null generator: leaf means of hierarchical spin arrays.
class HierarchicalArraySource : public LeafArraySource {
 public:
  HierarchicalArraySource(int d, HierarchicalKernel kernel, int n_replicas, int m);
  std::unique_ptr<LeafArraySource> clone() const override;
  int d() const override { return d_; }
  int r() const override { return kernel_.depth(); }
  void draw(Rng& rng, std::vector<double>& out) override;

 private:
  int d_;
  HierarchicalKernel kernel_;
  int n_;
  int m_;
};

// Alternative: the array reveals the first coordinate of the leaf label.
class CoordinatePlantSource : public LeafArraySource {
 public:
  CoordinatePlantSource(int d, int r, double noise_sd);
  std::unique_ptr<LeafArraySource> clone() const override;
  int d() const override { return d_; }
  int r() const override { return r_; }
  void draw(Rng& rng, std::vector<double>& out) override;

 private:
  int d_;
  int r_;
  double noise_sd_;
};

struct ExchangeabilityOptions {
  int permutations = 199;
  int trials = 500;
  int workers = 1;
};

struct ExchangeabilityReport {
  std::vector<std::string> stat_names;
  // Per-trial smoothed permutation p-values (trials x statistics); exactly
  // uniform under the null, used for calibration checks.
  std::vector<std::vector<double>> p_values;
  // The verdict compares the law of each statistic on even trials against
  // its law after one random relabeling on odd trials (two-sample KS), so a
  // plant is detectable even when its orbit under the group is small.
  std::vector<double> law_p_values;

  // Fraction of trials rejected at `alpha` with a Bonferroni split across
  // statistics.
  double rejection_rate(double alpha) const;
  // One-sample KS p-value of a statistic's p-values against uniform.
  double uniformity_pvalue(int stat) const;
  // Bonferroni across statistics on the law comparison.
  bool law_reject(double alpha) const;
};

ExchangeabilityReport hierarchical_exchangeability_test(const LeafArraySource& source,
                                                        const ExchangeabilityOptions& opt,
                                                        Rng rng);

// --- independence test ---------------------------------------------------------

class PairedVectorSource {
 public:
  virtual ~PairedVectorSource() = default;
  virtual void draw(Rng& rng, std::vector<double>& x, std::vector<double>& y) = 0;
};

struct IndependenceOptions {
  int trials = 1000;
  int permutations = 199;
  // With early stopping the test reports a conservative lower bound as soon
  // as non-rejection at `alpha` is certain.
  bool sequential = false;
  double alpha = 0.01;
};

struct IndependenceResult {
  double p_value = 1.0;
  double dcor = 0.0;
  bool completed = true;
  int permutations_used = 0;
  bool reject(double alpha) const { return p_value <= alpha; }
};

IndependenceResult independence_test(PairedVectorSource& source, const IndependenceOptions& opt,
                                     Rng rng);

// The cascade pipeline: per draw one conditioned pure-state sample, with a
// bounded spin summary paired against the top cluster weights.
enum class SpinSummary { leaf_means, within_leaf_overlap };

class CascadePipelineSource : public PairedVectorSource {
 public:
  CascadePipelineSource(CascadeParams params, HierarchicalKernel kernel, int n_replicas, int m,
                        SpinSummary summary, int top_weights = 3,
                        std::uint64_t cap_draws = 50000, int max_restarts = 64);
  void draw(Rng& rng, std::vector<double>& x, std::vector<double>& y) override;
  double restart_rate() const;

 private:
  CascadeParams params_;
  HierarchicalKernel kernel_;
  int n_, m_, top_;
  SpinSummary summary_;
  std::uint64_t cap_;
  int max_restarts_;
  std::uint64_t draws_ = 0;
  std::uint64_t restarts_ = 0;
};

// Control with built-in dependence: the spin summary leaks the top weight.
class PlantedDependenceSource : public PairedVectorSource {
 public:
  PlantedDependenceSource(CascadeParams params, double noise_sd, int top_weights = 3);
  void draw(Rng& rng, std::vector<double>& x, std::vector<double>& y) override;

 private:
  CascadeParams params_;
  double noise_sd_;
  int top_;
};

}  // namespace glasslab

#endif
