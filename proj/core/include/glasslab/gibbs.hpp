#ifndef GLASSLAB_GIBBS_HPP
#define GLASSLAB_GIBBS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "glasslab/rng.hpp"
#include "glasslab/stats.hpp"

namespace glasslab {

struct capacity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpinConfiguration {
  std::vector<std::int8_t> s;  // entries in {-1,+1}
  int size() const { return static_cast<int>(s.size()); }
};

std::uint32_t spin_mask(const SpinConfiguration& sigma);
SpinConfiguration spins_from_mask(std::uint32_t mask, int n);

// Dense couplings, one standard Gaussian per ordered site pair.
struct SKInstance {
  int n = 0;
  std::vector<double> g;  // row-major n x n
  static SKInstance sample(int n, Rng& rng);
};

double sk_energy(const SKInstance& inst, const SpinConfiguration& sigma);

struct KSatInstance {
  int n = 0;
  int k = 0;
  double alpha = 0.0;
  int clause_count = 0;
  std::vector<std::int8_t> signs;   // clause_count x k
  std::vector<std::int32_t> index;  // clause_count x k, 0-based sites
  static KSatInstance sample(int n, int k, double alpha, Rng& rng);
};

// Number of clauses whose every literal disagrees with sigma norm: sum of
// the clause products, each in {0,1}.
double ksat_energy(const KSatInstance& inst, const SpinConfiguration& sigma);

struct PerturbationParams {
  std::vector<double> x;  // x_p in [0,3], p = 1..p_max
  double s = 0.0;
  int p_max() const { return static_cast<int>(x.size()); }
  void validate() const;
  static PerturbationParams uniform_x(int p_max, double value, double s);
};

// Bias of truncating the 2^-p series at p_max, with |x_p| <= 3.
double perturbation_truncation_bias(int p_max);

// Accepts only exponents in (1/4, 1/2); returns N^gamma.
double perturbation_strength_schedule(int n_sites, double gamma);

// The Gaussian perturbation process evaluated jointly on all of {-1,+1}^N.
// Stored spectrally: one independent coefficient per subset of sites with odd
// multiplicity, which reproduces the covariance sum_p 4^{-p} x_p^2 R^p
// exactly and keeps memory at 2^N instead of N^p_max.
class PerturbationField {
 public:
  static constexpr int kMaxSites = 24;

  static PerturbationField build(int n_sites, const PerturbationParams& params, Rng& rng);

  int n_sites() const { return n_; }
  double value(const SpinConfiguration& sigma) const;
  double value_mask(std::uint32_t mask) const { return table_[mask]; }

 private:
  int n_ = 0;
  std::vector<double> table_;
};

struct GibbsEnsemble {
  std::variant<SKInstance, KSatInstance> instance;
  double beta = 1.0;
  std::optional<PerturbationParams> perturbation_params;
  std::optional<PerturbationField> perturbation_field;

  int n_sites() const;
  double base_energy(const SpinConfiguration& sigma) const;
  // H - (s/beta) g; requires an attached perturbation.
  double perturbed_energy(const SpinConfiguration& sigma) const;
  // -beta H + s g, the log weight actually exponentiated.
  double log_weight(const SpinConfiguration& sigma) const;
  bool has_perturbation() const { return perturbation_field.has_value(); }
};

GibbsEnsemble make_sk_ensemble(SKInstance inst, double beta);
GibbsEnsemble make_ksat_ensemble(KSatInstance inst, double beta);
void attach_perturbation(GibbsEnsemble& ensemble, const PerturbationParams& params, Rng& rng);

struct GibbsTable {
  std::vector<double> prob;  // indexed by spin mask
  double log_z = 0.0;
  double z = 0.0;
  double free_energy = 0.0;  // log_z / n
};

// Exact weights for N <= 24 (capacity error beyond).
GibbsTable enumerate_gibbs(const GibbsEnsemble& ensemble);

// Log weight of every configuration, indexed by spin mask.
std::vector<double> log_weight_vector(const GibbsEnsemble& ensemble);
double log_sum_exp(const std::vector<double>& values);

struct McmcOptions {
  int burnin_sweeps = 100;
  int thin_sweeps = 4;
};

struct McmcDiagnostics {
  double acceptance_rate = 0.0;
  double energy_autocorr_lag1 = 0.0;
};

// Independent single-site Metropolis chains, one per replica.
std::vector<SpinConfiguration> metropolis_replicas(const GibbsEnsemble& ensemble,
                                                   int n_replicas, int sweeps, Rng& rng,
                                                   const McmcOptions& opt = {},
                                                   McmcDiagnostics* diag = nullptr);

struct OverlapMatrix {
  int n = 0;
  std::vector<double> a;  // row-major n x n
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  static OverlapMatrix identity_like(int n);
};

OverlapMatrix overlap_matrix(const std::vector<SpinConfiguration>& replicas);

enum class ModelFamily { sk, ksat };

struct ConcentrationRow {
  int n_sites = 0;
  Estimate mad;          // Monte Carlo estimate of E|phi - E phi|
  double bound_ratio = 0.0;  // mad / (s + sqrt(alpha n))
};

struct ConcentrationTable {
  std::vector<ConcentrationRow> rows;
  LinearFit growth;  // log mad against log n
};

// phi = log Z of the perturbed ensemble over fresh disorder; exact mode only.
// k and alpha are used by the ksat family only.
ConcentrationTable concentration_probe(ModelFamily family, const std::vector<int>& n_list,
                                       double beta, int k, double alpha, double gamma,
                                       int trials, Rng& rng);

// Instance files: one-line JSON header then a CSV body (couplings or
// clauses). Replica dumps are one row of +-1 entries per replica.
void write_instance(std::ostream& os, const SKInstance& inst, double beta, std::uint64_t seed);
void write_instance(std::ostream& os, const KSatInstance& inst, double beta, std::uint64_t seed);
void write_replicas(std::ostream& os, const std::vector<SpinConfiguration>& replicas);

}  // namespace glasslab

#endif
