#include "glasslab/exchangeability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glasslab/parallel.hpp"

namespace glasslab {

double SigmaKernel::eval(double w, double u, double v) const {
  switch (family) {
    case Family::constant:
      return p1;
    case Family::logistic:
      return std::tanh(p1 * (u - 0.5) * (v - 0.5) * 4.0 + p2 * (w - 0.5) * 2.0);
    case Family::bump: {
      // Smooth bump centered where replica and coordinate uniforms agree.
      double t = u - v;
      double bump = std::exp(-p3 * t * t);
      return p1 * (2.0 * bump - 1.0) + p2 * (w - 0.5);
    }
  }
  return 0.0;
}

SpinArray generate_spins(const SigmaKernel& kernel, int n_replicas, int m, Rng& rng) {
  double w = rng.next_unit_open();
  std::vector<double> us(static_cast<std::size_t>(n_replicas));
  for (double& u : us) u = rng.next_unit_open();
  return generate_spins_given(kernel, w, us, m, rng);
}

SpinArray generate_spins_given(const SigmaKernel& kernel, double w,
                               const std::vector<double>& us, int m, Rng& rng) {
  SpinArray out;
  out.n = static_cast<int>(us.size());
  out.m = m;
  out.s.resize(static_cast<std::size_t>(out.n) * m);
  std::vector<double> vs(static_cast<std::size_t>(m));
  for (double& v : vs) v = rng.next_unit_open();
  for (int l = 0; l < out.n; ++l) {
    for (int i = 0; i < m; ++i) {
      double mean = kernel.eval(w, us[static_cast<std::size_t>(l)], vs[static_cast<std::size_t>(i)]);
      if (mean < -1.0 || mean > 1.0) {
        throw std::invalid_argument("SigmaKernel: kernel must stay within [-1,1]");
      }
      double coin = rng.next_unit();
      out.s[static_cast<std::size_t>(l) * m + i] = coin <= 0.5 * (1.0 + mean) ? 1 : -1;
    }
  }
  return out;
}

int PureStateSpinArray::leaf_count() const {
  int count = 1;
  for (int p = 0; p < r; ++p) count *= d;
  return count;
}

namespace {

constexpr std::uint64_t kCoinOffset = 0x40000000ull;

std::int8_t pure_state_spin(const HierarchicalKernel& kernel, const NoiseField& noise,
                            const VertexLabel& leaf, int replica, int i, int m) {
  double mag = kernel.magnetization(noise, leaf, i);
  double coin = noise.vertex_coord(
      leaf, static_cast<int>(kCoinOffset + static_cast<std::uint64_t>(replica) * m + i));
  return coin <= 0.5 * (1.0 + mag) ? 1 : -1;
}

}  // namespace

PureStateSpinArray generate_hierarchical_spins(const HierarchicalKernel& kernel,
                                               const NoiseField& noise, int d, int n_replicas,
                                               int m) {
  PureStateSpinArray out;
  out.d = d;
  out.r = kernel.depth();
  out.n = n_replicas;
  out.m = m;
  TreeShape shape(d, out.r);
  out.s.resize(static_cast<std::size_t>(shape.leaf_count()) * n_replicas * m);
  for (std::int64_t leaf = 0; leaf < shape.leaf_count(); ++leaf) {
    VertexLabel label = shape.label_of(shape.first_leaf() + leaf);
    for (int rep = 0; rep < n_replicas; ++rep) {
      for (int i = 0; i < m; ++i) {
        out.s[(static_cast<std::size_t>(leaf) * n_replicas + rep) * m + i] =
            pure_state_spin(kernel, noise, label, rep, i, m);
      }
    }
  }
  return out;
}

std::vector<double> magnetization(const PureStateSpinArray& arr, int leaf) {
  if (arr.n < 1) throw std::invalid_argument("magnetization: need at least one replica");
  std::vector<double> m(static_cast<std::size_t>(arr.m), 0.0);
  for (int rep = 0; rep < arr.n; ++rep) {
    for (int i = 0; i < arr.m; ++i) {
      m[static_cast<std::size_t>(i)] += arr.at(leaf, rep, i);
    }
  }
  for (double& v : m) v /= arr.n;
  return m;
}

double multi_overlap(const std::vector<std::vector<double>>& mags) {
  if (mags.empty()) throw std::invalid_argument("multi_overlap: no arguments");
  std::size_t m = mags[0].size();
  for (const auto& v : mags) {
    if (v.size() != m) throw std::invalid_argument("multi_overlap: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double prod = 1.0;
    for (const auto& v : mags) prod *= v[i];
    acc += prod;
  }
  return acc / static_cast<double>(m);
}

PureStateSample sample_pure_states(const CascadeParams& params, const HierarchicalKernel& kernel,
                                   int n_replicas, int m, std::uint64_t cap_draws,
                                   int max_restarts, Rng& rng) {
  params.validate();
  if (kernel.depth() != params.r) {
    throw std::invalid_argument("sample_pure_states: kernel depth mismatch");
  }
  PureStateSample out;
  TreeShape shape(params.d, params.r);
  const std::int64_t leaves = shape.leaf_count();
  for (int attempt = 0;; ++attempt) {
    if (attempt > max_restarts) {
      throw std::runtime_error("sample_pure_states: conditioning failed within restart budget");
    }
    Rng attempt_rng = rng.substream(static_cast<std::uint64_t>(attempt));
    Rng build_rng = attempt_rng.substream(1);
    CascadeWeights cascade = build_cascade(params, build_rng);
    // Only the landing counts matter: spins given the leaf are the same
    // fixed function of the noise field either way.
    Rng draw_rng = attempt_rng.substream(2);
    std::vector<int> counts(static_cast<std::size_t>(leaves), 0);
    std::int64_t unfilled = leaves;
    std::uint64_t used = 0;
    while (unfilled > 0 && used < cap_draws) {
      std::int64_t leaf = cascade.sample_leaf_id(draw_rng) - shape.first_leaf();
      ++used;
      if (++counts[static_cast<std::size_t>(leaf)] == n_replicas) --unfilled;
    }
    out.draws_used += used;
    if (unfilled > 0) {
      ++out.restarts;
      continue;
    }
    NoiseField noise(attempt_rng.substream(3).next_u64());
    out.spins = generate_hierarchical_spins(kernel, noise, params.d, n_replicas, m);
    out.leaf_masses.resize(static_cast<std::size_t>(leaves));
    for (std::int64_t leaf = 0; leaf < leaves; ++leaf) {
      out.leaf_masses[static_cast<std::size_t>(leaf)] =
          cascade.V_by_id(shape.first_leaf() + leaf);
    }
    out.top_weights = out.leaf_masses;
    std::sort(out.top_weights.begin(), out.top_weights.end(), std::greater<double>());
    out.residual = cascade.residual_mass();
    return out;
  }
}

// --- array sources ------------------------------------------------------------

HierarchicalArraySource::HierarchicalArraySource(int d, HierarchicalKernel kernel,
                                                 int n_replicas, int m)
    : d_(d), kernel_(std::move(kernel)), n_(n_replicas), m_(m) {}

std::unique_ptr<LeafArraySource> HierarchicalArraySource::clone() const {
  return std::make_unique<HierarchicalArraySource>(*this);
}

void HierarchicalArraySource::draw(Rng& rng, std::vector<double>& out) {
  NoiseField noise(rng.next_u64());
  PureStateSpinArray arr = generate_hierarchical_spins(kernel_, noise, d_, n_, m_);
  const int leaves = arr.leaf_count();
  out.resize(static_cast<std::size_t>(leaves));
  for (int leaf = 0; leaf < leaves; ++leaf) {
    double acc = 0.0;
    for (int rep = 0; rep < n_; ++rep) {
      for (int i = 0; i < m_; ++i) acc += arr.at(leaf, rep, i);
    }
    out[static_cast<std::size_t>(leaf)] = acc / (static_cast<double>(n_) * m_);
  }
}

CoordinatePlantSource::CoordinatePlantSource(int d, int r, double noise_sd)
    : d_(d), r_(r), noise_sd_(noise_sd) {}

std::unique_ptr<LeafArraySource> CoordinatePlantSource::clone() const {
  return std::make_unique<CoordinatePlantSource>(*this);
}

void CoordinatePlantSource::draw(Rng& rng, std::vector<double>& out) {
  TreeShape shape(d_, r_);
  out.resize(static_cast<std::size_t>(shape.leaf_count()));
  for (std::int64_t leaf = 0; leaf < shape.leaf_count(); ++leaf) {
    VertexLabel label = shape.label_of(shape.first_leaf() + leaf);
    out[static_cast<std::size_t>(leaf)] =
        static_cast<double>(label.coord(0)) + noise_sd_ * rng.next_normal();
  }
}

// --- permutation machinery ------------------------------------------------------

namespace {

struct StatPanel {
  int d, r;
  TreeShape shape;
  std::vector<double> centered_pos;

  explicit StatPanel(int d_in, int r_in) : d(d_in), r(r_in), shape(d_in, r_in) {
    std::int64_t leaves = shape.leaf_count();
    centered_pos.resize(static_cast<std::size_t>(leaves));
    for (std::int64_t k = 0; k < leaves; ++k) {
      centered_pos[static_cast<std::size_t>(k)] =
          static_cast<double>(k) / std::max<std::int64_t>(1, leaves - 1) - 0.5;
    }
  }

  static std::vector<std::string> names() {
    return {"lex_weighted_mean", "first_coordinate_contrast", "sibling_gradient"};
  }

  void eval(const std::vector<double>& x, double* out) const {
    const std::int64_t leaves = shape.leaf_count();
    double lex = 0.0;
    for (std::int64_t k = 0; k < leaves; ++k) {
      lex += centered_pos[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
    }
    out[0] = std::fabs(lex);

    // Contrast between the first and last top-level subtree.
    const std::int64_t block = leaves / d;
    double first = 0.0, last = 0.0;
    for (std::int64_t k = 0; k < block; ++k) {
      first += x[static_cast<std::size_t>(k)];
      last += x[static_cast<std::size_t>(leaves - block + k)];
    }
    out[1] = std::fabs(first - last) / static_cast<double>(block);

    // Within-parent position gradient at the bottom level.
    double grad = 0.0;
    for (std::int64_t k = 0; k < leaves; ++k) {
      double pos_in_parent = static_cast<double>(k % d) - 0.5 * (d - 1);
      grad += pos_in_parent * x[static_cast<std::size_t>(k)];
    }
    out[2] = std::fabs(grad);
  }
};

// Leaf-index image table of a sampled hierarchical permutation.
void leaf_permutation(const HierarchicalPermutation& pi, const TreeShape& shape,
                      std::vector<std::uint32_t>& out) {
  const std::int64_t leaves = shape.leaf_count();
  out.resize(static_cast<std::size_t>(leaves));
  for (std::int64_t k = 0; k < leaves; ++k) {
    VertexLabel image = pi.apply(shape.label_of(shape.first_leaf() + k));
    out[static_cast<std::size_t>(k)] =
        static_cast<std::uint32_t>(shape.id_of(image) - shape.first_leaf());
  }
}

struct ExchAccumulator {
  std::vector<std::vector<double>> p_values;
  // Statistic values feeding the cross-trial law comparison: even trials
  // unpermuted, odd trials after one uniform relabeling.
  std::vector<std::vector<double>> observed_law;
  std::vector<std::vector<double>> permuted_law;
  void merge(const ExchAccumulator& o) {
    p_values.insert(p_values.end(), o.p_values.begin(), o.p_values.end());
    if (observed_law.empty()) observed_law.resize(o.observed_law.size());
    if (permuted_law.empty()) permuted_law.resize(o.permuted_law.size());
    for (std::size_t s = 0; s < o.observed_law.size(); ++s) {
      observed_law[s].insert(observed_law[s].end(), o.observed_law[s].begin(),
                             o.observed_law[s].end());
      permuted_law[s].insert(permuted_law[s].end(), o.permuted_law[s].begin(),
                             o.permuted_law[s].end());
    }
  }
};

}  // namespace

double ExchangeabilityReport::rejection_rate(double alpha) const {
  if (p_values.empty()) return 0.0;
  double level = alpha / static_cast<double>(stat_names.size());
  std::size_t rejected = 0;
  for (const auto& row : p_values) {
    for (double p : row) {
      if (p <= level) {
        ++rejected;
        break;
      }
    }
  }
  return static_cast<double>(rejected) / static_cast<double>(p_values.size());
}

double ExchangeabilityReport::uniformity_pvalue(int stat) const {
  std::vector<double> col;
  col.reserve(p_values.size());
  for (const auto& row : p_values) col.push_back(row[static_cast<std::size_t>(stat)]);
  return ks_uniform_pvalue(ks_statistic_uniform(col), col.size());
}

bool ExchangeabilityReport::law_reject(double alpha) const {
  double level = alpha / static_cast<double>(stat_names.size());
  for (double p : law_p_values) {
    if (p <= level) return true;
  }
  return false;
}

ExchangeabilityReport hierarchical_exchangeability_test(const LeafArraySource& source,
                                                        const ExchangeabilityOptions& opt,
                                                        Rng rng) {
  const int d = source.d();
  const int r = source.r();
  ExchangeabilityReport report;
  report.stat_names = StatPanel::names();
  const std::size_t n_stats = report.stat_names.size();

  if (d == 1) {
    // The group is trivial; every statistic is invariant by definition.
    report.p_values.assign(static_cast<std::size_t>(opt.trials),
                           std::vector<double>(n_stats, 1.0));
    report.law_p_values.assign(n_stats, 1.0);
    return report;
  }

  StatPanel panel(d, r);
  constexpr std::uint64_t kChunk = 16;
  ExchAccumulator total = chunked_reduce<ExchAccumulator>(
      static_cast<std::uint64_t>(opt.trials), kChunk, opt.workers, rng,
      [&](Rng& stream, std::uint64_t chunk_index, std::uint64_t count, ExchAccumulator& acc) {
        auto local = source.clone();
        acc.observed_law.resize(n_stats);
        acc.permuted_law.resize(n_stats);
        std::vector<double> x, y;
        std::vector<std::uint32_t> perm;
        std::vector<double> obs(n_stats), cur(n_stats);
        std::vector<std::vector<double>> permuted(n_stats);
        for (std::uint64_t t = 0; t < count; ++t) {
          Rng trial = stream.substream(t);
          local->draw(trial, x);
          panel.eval(x, obs.data());
          for (auto& v : permuted) v.clear();
          y.resize(x.size());
          for (int b = 0; b < opt.permutations; ++b) {
            HierarchicalPermutation pi = HierarchicalPermutation::sample(d, r, trial);
            leaf_permutation(pi, panel.shape, perm);
            for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[perm[k]];
            panel.eval(y, cur.data());
            for (std::size_t s = 0; s < n_stats; ++s) permuted[s].push_back(cur[s]);
          }
          std::vector<double> row(n_stats);
          for (std::size_t s = 0; s < n_stats; ++s) {
            row[s] = smoothed_permutation_pvalue(obs[s], permuted[s], trial);
          }
          acc.p_values.push_back(std::move(row));
          // Alternate trials feed the two independent samples of the law
          // comparison; the permuted side reuses the first drawn relabeling.
          bool global_even = ((chunk_index * kChunk + t) % 2) == 0;
          for (std::size_t s = 0; s < n_stats; ++s) {
            if (global_even) acc.observed_law[s].push_back(obs[s]);
            else acc.permuted_law[s].push_back(permuted[s][0]);
          }
        }
      });
  report.p_values = std::move(total.p_values);
  report.law_p_values.resize(n_stats);
  for (std::size_t s = 0; s < n_stats; ++s) {
    if (total.observed_law[s].empty() || total.permuted_law[s].empty()) {
      report.law_p_values[s] = 1.0;
      continue;
    }
    double stat = ks_statistic_two_sample(total.observed_law[s], total.permuted_law[s]);
    report.law_p_values[s] =
        ks_two_sample_pvalue(stat, total.observed_law[s].size(), total.permuted_law[s].size());
  }
  return report;
}

IndependenceResult independence_test(PairedVectorSource& source, const IndependenceOptions& opt,
                                     Rng rng) {
  if (opt.trials < 8) throw std::invalid_argument("independence_test: trials >= 8");
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(opt.trials));
  std::vector<std::vector<double>> ys(static_cast<std::size_t>(opt.trials));
  for (int t = 0; t < opt.trials; ++t) {
    Rng draw = rng.substream(static_cast<std::uint64_t>(t));
    source.draw(draw, xs[static_cast<std::size_t>(t)], ys[static_cast<std::size_t>(t)]);
  }
  DistanceCorrelation dc(xs, ys);
  if (dc.degenerate()) {
    throw degenerate_statistic_error("independence_test: constant summaries");
  }
  IndependenceResult result;
  result.dcor = dc.observed();

  Rng perm_rng = rng.substream(0xffffffffull);
  std::vector<std::uint32_t> perm(static_cast<std::size_t>(opt.trials));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> permuted;
  permuted.reserve(static_cast<std::size_t>(opt.permutations));
  // Non-rejection at `alpha` is certain once this many permuted statistics
  // reach the observed one: (1 + exceed) / (B + 1) > alpha from then on.
  const int stop_count = std::max(
      1, static_cast<int>(std::floor(opt.alpha * (opt.permutations + 1))));
  int exceed = 0;
  for (int b = 0; b < opt.permutations; ++b) {
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(perm_rng.next_below(i));
      std::swap(perm[i - 1], perm[j]);
    }
    double stat = dc.permuted(perm);
    permuted.push_back(stat);
    if (stat >= result.dcor) ++exceed;
    if (opt.sequential && exceed >= stop_count) {
      result.completed = false;
      result.permutations_used = b + 1;
      result.p_value = static_cast<double>(exceed + 1) / (opt.permutations + 1);
      return result;
    }
  }
  result.permutations_used = opt.permutations;
  result.p_value = smoothed_permutation_pvalue(result.dcor, permuted, perm_rng);
  return result;
}

CascadePipelineSource::CascadePipelineSource(CascadeParams params, HierarchicalKernel kernel,
                                             int n_replicas, int m, SpinSummary summary,
                                             int top_weights, std::uint64_t cap_draws,
                                             int max_restarts)
    : params_(std::move(params)),
      kernel_(std::move(kernel)),
      n_(n_replicas),
      m_(m),
      top_(top_weights),
      summary_(summary),
      cap_(cap_draws),
      max_restarts_(max_restarts) {}

double CascadePipelineSource::restart_rate() const {
  return draws_ ? static_cast<double>(restarts_) / static_cast<double>(draws_) : 0.0;
}

void CascadePipelineSource::draw(Rng& rng, std::vector<double>& x, std::vector<double>& y) {
  PureStateSample sample = sample_pure_states(params_, kernel_, n_, m_, cap_, max_restarts_, rng);
  ++draws_;
  restarts_ += static_cast<std::uint64_t>(sample.restarts);
  const int leaves = sample.spins.leaf_count();
  x.clear();
  if (summary_ == SpinSummary::leaf_means) {
    for (int leaf = 0; leaf < leaves; ++leaf) {
      double acc = 0.0;
      for (int rep = 0; rep < n_; ++rep) {
        for (int i = 0; i < m_; ++i) acc += sample.spins.at(leaf, rep, i);
      }
      x.push_back(acc / (static_cast<double>(n_) * m_));
    }
  } else {
    for (int leaf = 0; leaf < leaves; ++leaf) {
      double acc = 0.0;
      int pairs = 0;
      for (int a = 0; a < n_; ++a) {
        for (int b = a + 1; b < n_; ++b) {
          double ov = 0.0;
          for (int i = 0; i < m_; ++i) {
            ov += sample.spins.at(leaf, a, i) * sample.spins.at(leaf, b, i);
          }
          acc += ov / m_;
          ++pairs;
        }
      }
      x.push_back(pairs ? acc / pairs : 0.0);
    }
  }
  y.assign(sample.top_weights.begin(),
           sample.top_weights.begin() + std::min<std::size_t>(static_cast<std::size_t>(top_),
                                                              sample.top_weights.size()));
}

PlantedDependenceSource::PlantedDependenceSource(CascadeParams params, double noise_sd,
                                                 int top_weights)
    : params_(std::move(params)), noise_sd_(noise_sd), top_(top_weights) {}

void PlantedDependenceSource::draw(Rng& rng, std::vector<double>& x, std::vector<double>& y) {
  Rng build = rng.substream(1);
  CascadeWeights cascade = build_cascade(params_, build);
  std::vector<double> masses = cascade.level_masses(params_.r);
  std::sort(masses.begin(), masses.end(), std::greater<double>());
  y.assign(masses.begin(), masses.begin() + std::min<std::size_t>(
                                                static_cast<std::size_t>(top_), masses.size()));
  x.assign(1, y[0] + noise_sd_ * rng.next_normal());
}

}  // namespace glasslab
