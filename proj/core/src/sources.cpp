#include "glasslab/sources.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace glasslab {

std::uint64_t NoiseField::key_of(const VertexLabel& v) const {
  std::uint64_t k = mix64(seed_ ^ 0x5bf03635d1a21bd1ull);
  k = mix64(k ^ static_cast<std::uint64_t>(v.depth() + 1));
  for (int i = 0; i < v.depth(); ++i) {
    k = mix64(k ^ (static_cast<std::uint64_t>(v.coord(i)) + 0x9e3779b97f4a7c15ull));
  }
  return k;
}

double NoiseField::vertex(const VertexLabel& v) const {
  return (static_cast<double>(mix64(key_of(v) ^ 0xa76b2e254e37ff05ull) >> 11) + 0.5) * 0x1.0p-53;
}

double NoiseField::vertex_coord(const VertexLabel& v, int i) const {
  std::uint64_t k = mix64(key_of(v) ^ mix64(static_cast<std::uint64_t>(i) + 0x2545f4914f6cdd1dull));
  return (static_cast<double>(k >> 11) + 0.5) * 0x1.0p-53;
}

HierarchicalKernel HierarchicalKernel::balanced(int r, double gain) {
  HierarchicalKernel k;
  k.level_coefs.assign(static_cast<std::size_t>(r + 1), 1.0 / std::sqrt(static_cast<double>(r + 1)));
  k.gain = gain;
  return k;
}

double HierarchicalKernel::magnetization(const NoiseField& noise, const VertexLabel& leaf,
                                         int i) const {
  if (leaf.depth() != depth()) {
    throw std::domain_error("HierarchicalKernel: leaf depth does not match kernel depth");
  }
  double acc = 0.0;
  for (int p = 0; p <= depth(); ++p) {
    VertexLabel v = leaf.prefix(p);
    acc += level_coefs[static_cast<std::size_t>(p)] * (2.0 * noise.vertex_coord(v, i) - 1.0);
    if (vertex_coef != 0.0) {
      acc += vertex_coef * (2.0 * noise.vertex(v) - 1.0);
    }
  }
  return std::tanh(gain * acc);
}

void RandomMeasureModel::draw_group(int n_replicas, int m, Rng& rng, ReplicaGroup& out) const {
  out.n = n_replicas;
  out.m = m;
  out.spins.resize(static_cast<std::size_t>(n_replicas) * m);
  out.atoms.resize(static_cast<std::size_t>(n_replicas));
  out.overlaps = OverlapMatrix::identity_like(n_replicas);
  for (int l = 0; l < n_replicas; ++l) {
    int atom = sample_atom(rng);
    out.atoms[static_cast<std::size_t>(l)] = atom;
    atom_spins(atom, rng, &out.spins[static_cast<std::size_t>(l) * m], m);
  }
  for (int a = 0; a < n_replicas; ++a) {
    out.overlaps.at(a, a) = atom_overlap(out.atoms[static_cast<std::size_t>(a)],
                                         out.atoms[static_cast<std::size_t>(a)]);
    for (int b = a + 1; b < n_replicas; ++b) {
      double v = atom_overlap(out.atoms[static_cast<std::size_t>(a)],
                              out.atoms[static_cast<std::size_t>(b)]);
      out.overlaps.at(a, b) = v;
      out.overlaps.at(b, a) = v;
    }
  }
}

CascadeMeasureModel::CascadeMeasureModel(CascadeParams params, HierarchicalKernel kernel,
                                         RSBDiscretization disc)
    : params_(std::move(params)), kernel_(std::move(kernel)), disc_(std::move(disc)) {
  params_.validate();
  disc_.validate();
  if (disc_.r != params_.r) {
    throw std::invalid_argument("CascadeMeasureModel: discretization depth mismatch");
  }
  if (kernel_.depth() != params_.r) {
    throw std::invalid_argument("CascadeMeasureModel: kernel depth mismatch");
  }
  q_ = disc_.q_grid();
}

CascadeMeasureModel::CascadeMeasureModel(CascadeParams params, HierarchicalKernel kernel)
    : CascadeMeasureModel(params, std::move(kernel),
                          RSBDiscretization::from_q_grid(default_q_grid(params.r))) {}

std::unique_ptr<RandomMeasureModel> CascadeMeasureModel::clone() const {
  return std::make_unique<CascadeMeasureModel>(params_, kernel_, disc_);
}

void CascadeMeasureModel::sample_measure(Rng& rng) {
  Rng weights_stream = rng.substream(1);
  cascade_ = std::make_unique<CascadeWeights>(build_cascade(params_, weights_stream));
  noise_ = std::make_unique<NoiseField>(rng.substream(2).next_u64());
  kept_mass_ = 1.0 - cascade_->residual_mass();
}

const CascadeWeights& CascadeMeasureModel::cascade() const {
  if (!cascade_) throw std::logic_error("CascadeMeasureModel: sample_measure first");
  return *cascade_;
}

int CascadeMeasureModel::atom_count() const {
  return static_cast<int>(cascade().shape().leaf_count());
}

double CascadeMeasureModel::atom_mass(int atom) const {
  // Kept leaves renormalized to a probability measure.
  return cascade().V_by_id(cascade().shape().first_leaf() + atom) / kept_mass_;
}

VertexLabel CascadeMeasureModel::atom_label(int atom) const {
  return cascade().shape().label_of(cascade().shape().first_leaf() + atom);
}

double CascadeMeasureModel::atom_overlap(int a, int b) const {
  // Wedge of two leaves from their level offsets, no label materialization.
  const int d = params_.d;
  std::int64_t xa = a, xb = b;
  if (xa == xb) return q_[static_cast<std::size_t>(params_.r)];
  int agree = 0;
  std::int64_t size = cascade().shape().leaf_count();
  while (size > 1) {
    size /= d;
    if (xa / size == xb / size) {
      ++agree;
      xa %= size;
      xb %= size;
    } else {
      break;
    }
  }
  return q_[static_cast<std::size_t>(agree)];
}

int CascadeMeasureModel::sample_atom(Rng& rng) const {
  return static_cast<int>(cascade().sample_leaf_id(rng) - cascade().shape().first_leaf());
}

void CascadeMeasureModel::atom_spins(int atom, Rng& rng, std::int8_t* out, int m) const {
  VertexLabel leaf = atom_label(atom);
  for (int i = 0; i < m; ++i) {
    double mag = kernel_.magnetization(*noise_, leaf, i);
    out[i] = rng.next_unit() <= 0.5 * (1.0 + mag) ? 1 : -1;
  }
}

double CascadeMeasureModel::residual() const { return cascade().residual_mass(); }

double CascadeMeasureModel::overlap_mass(int p) const {
  if (p < 0 || p > params_.r) return 0.0;
  double hi = p == params_.r ? 1.0 : params_.zetas[static_cast<std::size_t>(p)];
  double lo = p == 0 ? 0.0 : params_.zetas[static_cast<std::size_t>(p - 1)];
  return hi - lo;
}

std::string CascadeMeasureModel::describe() const {
  std::string s = "cascade(r=" + std::to_string(params_.r) + ",d=" + std::to_string(params_.d) +
                  ",zetas=[";
  for (std::size_t i = 0; i < params_.zetas.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(params_.zetas[i]);
  }
  s += "])";
  return s;
}

TwoAtomControlModel::TwoAtomControlModel(double top_mass, double cross_overlap,
                                         double magnetization, int r)
    : top_mass_(top_mass), cross_overlap_(cross_overlap), magnetization_(magnetization) {
  if (!(top_mass > 0.0) || !(top_mass < 1.0)) {
    throw std::invalid_argument("TwoAtomControlModel: top mass in (0,1)");
  }
  if (r < 1) throw std::invalid_argument("TwoAtomControlModel: r >= 1");
  disc_ = RSBDiscretization::from_q_grid(default_q_grid(r));
}

std::unique_ptr<RandomMeasureModel> TwoAtomControlModel::clone() const {
  return std::make_unique<TwoAtomControlModel>(top_mass_, cross_overlap_, magnetization_,
                                               disc_.r);
}

void TwoAtomControlModel::sample_measure(Rng&) {
  // Fixed measure: nothing random at the disorder level, which is exactly
  // what the negative controls need.
}

double TwoAtomControlModel::atom_mass(int atom) const {
  return atom == 0 ? top_mass_ : 1.0 - top_mass_;
}

double TwoAtomControlModel::atom_overlap(int a, int b) const {
  return a == b ? 1.0 : cross_overlap_;
}

int TwoAtomControlModel::sample_atom(Rng& rng) const {
  return rng.next_unit() < top_mass_ ? 0 : 1;
}

void TwoAtomControlModel::atom_spins(int atom, Rng& rng, std::int8_t* out, int m) const {
  double mag = atom == 0 ? magnetization_ : -magnetization_;
  for (int i = 0; i < m; ++i) {
    out[i] = rng.next_unit() <= 0.5 * (1.0 + mag) ? 1 : -1;
  }
}

double TwoAtomControlModel::overlap_mass(int p) const {
  double same = top_mass_ * top_mass_ + (1.0 - top_mass_) * (1.0 - top_mass_);
  auto cls = disc_.classify(cross_overlap_);
  if (p == disc_.r) return same + (cls && *cls == disc_.r ? 1.0 - same : 0.0);
  if (cls && *cls == p) return 1.0 - same;
  return 0.0;
}

std::string TwoAtomControlModel::describe() const {
  return "two_atom(w=" + std::to_string(top_mass_) + ",q=" + std::to_string(cross_overlap_) +
         ",m=" + std::to_string(magnetization_) + ")";
}

}  // namespace glasslab
