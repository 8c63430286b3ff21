#ifndef GLASSLAB_CASCADE_HPP
#define GLASSLAB_CASCADE_HPP

#include <iosfwd>
#include <vector>

#include "glasslab/point_process.hpp"
#include "glasslab/rng.hpp"
#include "glasslab/stats.hpp"
#include "glasslab/tree.hpp"

namespace glasslab {

struct CascadeParams {
  int r = 1;
  std::vector<double> zetas;  // zeta_0 < ... < zeta_{r-1}, all in (0,1)
  int d = 32;                 // children kept per internal vertex

  void validate() const;
};

// Hierarchical random weights on the d-regular depth-r truncation: per-level
// Poisson points u, path products w, normalized masses v, and the relabelled
// masses V with children decreasing at every vertex. The un-kept mass is
// tracked as residual_mass so downstream tolerances can include it.
class CascadeWeights {
 public:
  const CascadeParams& params() const { return params_; }
  const TreeShape& shape() const { return shape_; }
  double residual_mass() const { return residual_mass_; }

  double u(const VertexLabel& v) const { return u_[checked_id(v, false)]; }
  double w(const VertexLabel& v) const { return w_[checked_id(v, false)]; }
  double v(const VertexLabel& vx) const { return v_[checked_id(vx, true)]; }
  double V(const VertexLabel& vx) const { return V_[checked_id(vx, true)]; }
  double V_by_id(std::int64_t id) const { return V_[static_cast<std::size_t>(id)]; }
  // Image of a vertex under the reordering bijection.
  VertexLabel pi(const VertexLabel& v) const;

  // Leaf drawn proportionally to V, renormalized over the kept leaves.
  VertexLabel sample_leaf(Rng& rng) const;
  std::int64_t sample_leaf_id(Rng& rng) const;

  // Ratios V_{alpha n} / V_alpha for |alpha| = r-1, decreasing, summing to 1.
  std::vector<double> child_ratios(const VertexLabel& alpha) const;

  // V restricted to one level, e.g. for level-restriction comparisons.
  std::vector<double> level_masses(int depth) const;

  // CSV rows (vertex_label,u,w,v,V) preceded by '#'-prefixed JSON header.
  void dump(std::ostream& os, std::uint64_t seed) const;

  friend CascadeWeights build_cascade(const CascadeParams& params, Rng& rng);

 private:
  CascadeWeights(const CascadeParams& p);
  std::size_t checked_id(const VertexLabel& v, bool allow_root) const;

  CascadeParams params_;
  TreeShape shape_;
  std::vector<double> u_, w_, v_, V_;
  std::vector<std::int64_t> pi_;
  std::vector<double> leaf_cdf_;
  double residual_mass_ = 0.0;
};

CascadeWeights build_cascade(const CascadeParams& params, Rng& rng);

// Representative overlap values: q_p = p/r for p = 0..r when the caller
// supplies no grid.
std::vector<double> default_q_grid(int r);

// Overlap of two leaves as the grid value at their wedge.
double leaf_overlap(const VertexLabel& a, const VertexLabel& b, const std::vector<double>& q);

struct TruncationBound {
  Estimate mean;    // Monte Carlo mean residual mass
  double upper;     // mean + 3 se, an upper estimate of the expectation
};

TruncationBound truncation_bound(const CascadeParams& params, int d, int builds, Rng& rng);

}  // namespace glasslab

#endif
