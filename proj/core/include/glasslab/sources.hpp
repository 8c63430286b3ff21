#ifndef GLASSLAB_SOURCES_HPP
#define GLASSLAB_SOURCES_HPP

#include <memory>
#include <string>
#include <vector>

#include "glasslab/cascade.hpp"
#include "glasslab/rsb.hpp"
#include "glasslab/rng.hpp"
#include "glasslab/tree.hpp"

namespace glasslab {

// Keyed uniform noise attached to tree vertices, one stream per vertex and
// one per (vertex, coordinate) pair. A fresh seed gives an independent field.
class NoiseField {
 public:
  explicit NoiseField(std::uint64_t seed) : seed_(seed) {}
  double vertex(const VertexLabel& v) const;
  double vertex_coord(const VertexLabel& v, int i) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t key_of(const VertexLabel& v) const;
  std::uint64_t seed_;
};

// Built-in measurable family mapping the root-path noise of a leaf to a
// magnetization in [-1,1]: a tanh of level-weighted contributions. With
// vertex_coef = 0 the output depends only on the per-coordinate noise along
// the path (one function shared by all states); vertex_coef > 0 mixes in the
// per-state vertex noise.
struct HierarchicalKernel {
  std::vector<double> level_coefs;  // one per depth 0..r (root first)
  double gain = 1.0;
  double vertex_coef = 0.0;

  double magnetization(const NoiseField& noise, const VertexLabel& leaf, int i) const;
  int depth() const { return static_cast<int>(level_coefs.size()) - 1; }
  static HierarchicalKernel balanced(int r, double gain);
};

// One group of replicas drawn from a sampled measure: spins over a finite
// window plus the pairwise overlaps.
struct ReplicaGroup {
  int n = 0;
  int m = 0;
  std::vector<std::int8_t> spins;  // n x m
  OverlapMatrix overlaps;
  std::vector<int> atoms;

  std::int8_t spin(int replica, int i) const {
    return spins[static_cast<std::size_t>(replica) * m + i];
  }
};

// A random measure with finite atomic support, spin decoration, and a known
// one-overlap law. sample_measure draws the disorder; everything after reads
// the realized state. Estimators clone one model per worker chunk.
class RandomMeasureModel {
 public:
  virtual ~RandomMeasureModel() = default;
  virtual std::unique_ptr<RandomMeasureModel> clone() const = 0;
  virtual void sample_measure(Rng& rng) = 0;

  virtual int atom_count() const = 0;
  virtual double atom_mass(int atom) const = 0;
  virtual double atom_overlap(int a, int b) const = 0;
  virtual int sample_atom(Rng& rng) const = 0;
  // Spins of one replica living in `atom` over a window of size m.
  virtual void atom_spins(int atom, Rng& rng, std::int8_t* out, int m) const = 0;

  virtual double residual() const = 0;
  // zeta(I_p): the law of one overlap between two independent replicas.
  virtual double overlap_mass(int p) const = 0;
  virtual const RSBDiscretization& discretization() const = 0;
  virtual std::string describe() const = 0;

  void draw_group(int n_replicas, int m, Rng& rng, ReplicaGroup& out) const;
};

// The hierarchical random-weight measure: fresh weights per sample_measure,
// atoms are the kept leaves, overlaps are grid values at the leaf wedge, and
// spins come from the kernel over a per-measure noise field.
class CascadeMeasureModel : public RandomMeasureModel {
 public:
  CascadeMeasureModel(CascadeParams params, HierarchicalKernel kernel,
                      RSBDiscretization disc);
  CascadeMeasureModel(CascadeParams params, HierarchicalKernel kernel);

  std::unique_ptr<RandomMeasureModel> clone() const override;
  void sample_measure(Rng& rng) override;
  int atom_count() const override;
  double atom_mass(int atom) const override;
  double atom_overlap(int a, int b) const override;
  int sample_atom(Rng& rng) const override;
  void atom_spins(int atom, Rng& rng, std::int8_t* out, int m) const override;
  double residual() const override;
  double overlap_mass(int p) const override;
  const RSBDiscretization& discretization() const override { return disc_; }
  std::string describe() const override;

  const CascadeWeights& cascade() const;
  VertexLabel atom_label(int atom) const;
  double renormalized_atom_mass(int atom) const { return atom_mass(atom); }

 private:
  CascadeParams params_;
  HierarchicalKernel kernel_;
  RSBDiscretization disc_;
  std::vector<double> q_;
  std::unique_ptr<CascadeWeights> cascade_;
  std::unique_ptr<NoiseField> noise_;
  double kept_mass_ = 1.0;
};

// Negative control: a fixed two-atom measure with constant magnetizations.
// Deterministic disorder, so the mixture/defect identities fail for it.
class TwoAtomControlModel : public RandomMeasureModel {
 public:
  TwoAtomControlModel(double top_mass, double cross_overlap, double magnetization, int r);

  std::unique_ptr<RandomMeasureModel> clone() const override;
  void sample_measure(Rng& rng) override;
  int atom_count() const override { return 2; }
  double atom_mass(int atom) const override;
  double atom_overlap(int a, int b) const override;
  int sample_atom(Rng& rng) const override;
  void atom_spins(int atom, Rng& rng, std::int8_t* out, int m) const override;
  double residual() const override { return 0.0; }
  double overlap_mass(int p) const override;
  const RSBDiscretization& discretization() const override { return disc_; }
  std::string describe() const override;

 private:
  double top_mass_;
  double cross_overlap_;
  double magnetization_;
  RSBDiscretization disc_;
};

}  // namespace glasslab

#endif
