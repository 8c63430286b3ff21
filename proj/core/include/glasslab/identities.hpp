#ifndef GLASSLAB_IDENTITIES_HPP
#define GLASSLAB_IDENTITIES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "glasslab/rsb.hpp"
#include "glasslab/sources.hpp"
#include "glasslab/stats.hpp"

namespace glasslab {

// --- simplex tilt ----------------------------------------------------------

// Interior point of the open simplex: all coordinates positive, sum < 1.
struct SimplexPoint {
  std::vector<double> x;
  void validate() const;
};

struct TiltVector {
  std::vector<double> a;
};

// Normalizer sum_t x_t e^{a_t} + 1 - sum_t x_t, computed with a max shift.
double tilt_normalizer(const TiltVector& a, const SimplexPoint& x);
// x_t e^{a_t} / normalizer; maps the interior to itself.
SimplexPoint tilt_map(const TiltVector& a, const SimplexPoint& x);
// Residual of the normalizer identity under inversion; 0 in exact arithmetic.
double tilt_identity_residual(const TiltVector& a, const SimplexPoint& x);

// --- bounded test functions -------------------------------------------------

struct TestFunctionSpec {
  enum class Kind { one, spin_product, overlap_monomial };
  Kind kind = Kind::one;
  std::vector<std::pair<int, int>> spin_factors;            // (replica, coordinate)
  std::vector<std::tuple<int, int, int>> overlap_factors;   // (l, l', power)

  double eval(const ReplicaGroup& g) const;
  std::string name() const;
  static TestFunctionSpec one();
  static TestFunctionSpec spins(std::vector<std::pair<int, int>> factors);
};

// --- identity defect estimator ----------------------------------------------

struct GgiOptions {
  std::uint64_t samples = 100000;
  int groups_per_measure = 8;  // replica groups amortized per disorder draw
  int m_window = 16;
  int workers = 1;
  std::uint64_t chunk = 2048;  // measures per stream chunk
};

struct GgiResult {
  Estimate delta;         // |defect| with its clustered standard error
  double mean_residual = 0.0;
  std::uint64_t measures = 0;
};

// Defect of the one-overlap identity for (f, n, p): the gap between the
// coupled term and the 1/n mixture of the prior and the existing overlaps.
GgiResult ggi_delta(const RandomMeasureModel& model, const TestFunctionSpec& f, int n, int p,
                    const GgiOptions& opt, Rng rng);

// Whole panel evaluated on shared draws (one group of max n + 1 replicas per
// sample); entries stay individually valid and the run is one pass.
struct GgiPanelEntry {
  TestFunctionSpec f;
  int n = 2;
  int p = 1;
  std::string label;
};

std::vector<GgiResult> ggi_panel(const RandomMeasureModel& model,
                                 const std::vector<GgiPanelEntry>& entries,
                                 const GgiOptions& opt, Rng rng);

// --- conditional mixture law -------------------------------------------------

struct MixtureLawResult {
  double tv_distance = 0.0;           // count-weighted conditional total variation
  std::uint64_t cells = 0;            // conditioning patterns observed
  std::uint64_t groups = 0;
  double mean_residual = 0.0;
  std::vector<double> marginal;       // empirical one-overlap law by interval
};

MixtureLawResult mixture_law_check(const RandomMeasureModel& model, int n,
                                   const GgiOptions& opt, Rng rng);

// --- reweighting identity -----------------------------------------------------

// Bounded functional of (spins, cluster-remainder vector): an optional box
// constraint on remainder coordinates times an optional spin product.
struct PhiSpec {
  struct Box {
    int node = 0;  // Configuration node id
    double lo = 0.0;
    double hi = 1.0;
  };
  std::vector<Box> boxes;
  std::vector<std::pair<int, int>> spin_factors;
  std::string label;

  double eval(const std::vector<double>& delta, const ReplicaGroup& g) const;
};

struct ReweightingOptions {
  std::uint64_t samples = 100000;
  int groups_per_measure = 4;
  int m_window = 8;
  int workers = 1;
  std::uint64_t chunk = 2048;
};

struct ReweightingPhiResult {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  double diff = 0.0;
  double se = 0.0;  // pooled, of the paired difference
};

struct ReweightingResult {
  std::vector<ReweightingPhiResult> phis;
  double event_rate = 0.0;  // empirical mass of the clustering event
  double mean_residual = 0.0;
  std::uint64_t groups = 0;
};

// Two-sided Monte Carlo check of the change-of-weights identity on a fixed
// clustering pattern: the plain average of Phi against the tilted average
// with the exponential reweighting, both conditioned on the pattern event.
ReweightingResult reweighting_check(const RandomMeasureModel& model,
                                    const Configuration& config,
                                    const std::vector<double>& b_vertex,
                                    const std::vector<PhiSpec>& phis,
                                    const ReweightingOptions& opt, Rng rng);

}  // namespace glasslab

#endif
