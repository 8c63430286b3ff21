#include "glasslab/identities.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "glasslab/parallel.hpp"

namespace glasslab {

void SimplexPoint::validate() const {
  double sum = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) throw std::invalid_argument("SimplexPoint: coordinates must be positive");
    sum += v;
  }
  if (!(sum < 1.0)) throw std::invalid_argument("SimplexPoint: coordinates must sum below 1");
}

double tilt_normalizer(const TiltVector& a, const SimplexPoint& x) {
  if (a.a.size() != x.x.size()) throw std::invalid_argument("tilt: dimension mismatch");
  double shift = 0.0;
  for (double v : a.a) shift = std::max(shift, v);
  double sum = 0.0, total = 0.0;
  for (std::size_t t = 0; t < x.x.size(); ++t) {
    sum += x.x[t] * std::exp(a.a[t] - shift);
    total += x.x[t];
  }
  sum += (1.0 - total) * std::exp(-shift);
  return sum * std::exp(shift);
}

SimplexPoint tilt_map(const TiltVector& a, const SimplexPoint& x) {
  if (a.a.size() != x.x.size()) throw std::invalid_argument("tilt: dimension mismatch");
  x.validate();
  double shift = 0.0;
  for (double v : a.a) shift = std::max(shift, v);
  double total = 0.0;
  for (double v : x.x) total += v;
  double denom = (1.0 - total) * std::exp(-shift);
  SimplexPoint out;
  out.x.resize(x.x.size());
  for (std::size_t t = 0; t < x.x.size(); ++t) {
    out.x[t] = x.x[t] * std::exp(a.a[t] - shift);
    denom += out.x[t];
  }
  for (double& v : out.x) v /= denom;
  return out;
}

double tilt_identity_residual(const TiltVector& a, const SimplexPoint& x) {
  TiltVector neg;
  neg.a.resize(a.a.size());
  for (std::size_t t = 0; t < a.a.size(); ++t) neg.a[t] = -a.a[t];
  double lhs = tilt_normalizer(a, tilt_map(neg, x));
  double rhs = 1.0 / tilt_normalizer(neg, x);
  return std::fabs(lhs - rhs);
}

TestFunctionSpec TestFunctionSpec::one() { return TestFunctionSpec{}; }

TestFunctionSpec TestFunctionSpec::spins(std::vector<std::pair<int, int>> factors) {
  TestFunctionSpec f;
  f.kind = Kind::spin_product;
  f.spin_factors = std::move(factors);
  return f;
}

double TestFunctionSpec::eval(const ReplicaGroup& g) const {
  switch (kind) {
    case Kind::one:
      return 1.0;
    case Kind::spin_product: {
      double v = 1.0;
      for (const auto& [replica, coord] : spin_factors) {
        if (replica < 0 || replica >= g.n || coord < 0 || coord >= g.m) {
          throw std::invalid_argument("TestFunctionSpec: spin factor out of range");
        }
        v *= g.spin(replica, coord);
      }
      return v;
    }
    case Kind::overlap_monomial: {
      double v = 1.0;
      for (const auto& [l, lp, power] : overlap_factors) {
        double o = g.overlaps.at(l, lp);
        for (int k = 0; k < power; ++k) v *= o;
      }
      return v;
    }
  }
  return 1.0;
}

std::string TestFunctionSpec::name() const {
  switch (kind) {
    case Kind::one:
      return "1";
    case Kind::spin_product: {
      std::string s = "prod";
      for (const auto& [replica, coord] : spin_factors) {
        s += "_s" + std::to_string(coord) + "r" + std::to_string(replica);
      }
      return s;
    }
    case Kind::overlap_monomial:
      return "overlap_monomial";
  }
  return "?";
}

namespace {

double int_pow(double x, int p) {
  double v = 1.0;
  for (int i = 0; i < p; ++i) v *= x;
  return v;
}

struct GgiAccumulator {
  std::vector<VectorAccumulator> per_entry;
  Accumulator residual;

  void merge(const GgiAccumulator& o) {
    if (per_entry.empty()) {
      *this = o;
      return;
    }
    if (o.per_entry.empty()) return;
    for (std::size_t i = 0; i < per_entry.size(); ++i) per_entry[i].merge(o.per_entry[i]);
    residual.merge(o.residual);
  }
};

std::vector<GgiResult> run_ggi_panel(const RandomMeasureModel& model,
                                     const std::vector<GgiPanelEntry>& entries,
                                     const GgiOptions& opt, Rng rng) {
  int max_n = 0;
  for (const auto& e : entries) {
    if (e.n < 2) throw std::invalid_argument("ggi_delta: n >= 2 required");
    if (e.p < 1) throw std::invalid_argument("ggi_delta: p >= 1 required");
    max_n = std::max(max_n, e.n);
  }
  const int group_size = max_n + 1;
  const std::uint64_t measures =
      (opt.samples + static_cast<std::uint64_t>(opt.groups_per_measure) - 1) /
      static_cast<std::uint64_t>(opt.groups_per_measure);

  GgiAccumulator total = chunked_reduce<GgiAccumulator>(
      measures, opt.chunk, opt.workers, rng,
      [&](Rng& stream, std::uint64_t, std::uint64_t count, GgiAccumulator& acc) {
        acc.per_entry.assign(entries.size(), VectorAccumulator(4));
        auto local = model.clone();
        ReplicaGroup group;
        std::vector<std::array<double, 4>> sums(entries.size());
        for (std::uint64_t i = 0; i < count; ++i) {
          Rng draw = stream.substream(i);
          local->sample_measure(draw);
          acc.residual.add(local->residual());
          for (auto& s : sums) s = {0.0, 0.0, 0.0, 0.0};
          for (int gidx = 0; gidx < opt.groups_per_measure; ++gidx) {
            Rng grng = draw.substream(1000 + static_cast<std::uint64_t>(gidx));
            local->draw_group(group_size, opt.m_window, grng, group);
            for (std::size_t e = 0; e < entries.size(); ++e) {
              const GgiPanelEntry& entry = entries[e];
              double fv = entry.f.eval(group);
              double rp_new = int_pow(group.overlaps.at(0, entry.n), entry.p);
              double rp_12 = int_pow(group.overlaps.at(0, 1), entry.p);
              double coupled = 0.0;
              for (int l = 1; l < entry.n; ++l) {
                coupled += fv * int_pow(group.overlaps.at(0, l), entry.p);
              }
              sums[e][0] += fv * rp_new;
              sums[e][1] += fv;
              sums[e][2] += rp_12;
              sums[e][3] += coupled;
            }
          }
          for (std::size_t e = 0; e < entries.size(); ++e) {
            std::array<double, 4> mean = sums[e];
            for (double& v : mean) v /= opt.groups_per_measure;
            acc.per_entry[e].add(mean.data());
          }
        }
      });

  std::vector<GgiResult> out(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const VectorAccumulator& acc = total.per_entry[e];
    double n = static_cast<double>(entries[e].n);
    double a = acc.mean(0), b = acc.mean(1), c = acc.mean(2), d = acc.mean(3);
    double defect = a - (b * c) / n - d / n;
    std::vector<double> grad = {1.0, -c / n, -b / n, -1.0 / n};
    out[e].delta = {std::fabs(defect), acc.linear_se(grad), acc.count()};
    out[e].mean_residual = total.residual.mean();
    out[e].measures = acc.count();
  }
  return out;
}

}  // namespace

GgiResult ggi_delta(const RandomMeasureModel& model, const TestFunctionSpec& f, int n, int p,
                    const GgiOptions& opt, Rng rng) {
  return run_ggi_panel(model, {{f, n, p, f.name()}}, opt, rng)[0];
}

std::vector<GgiResult> ggi_panel(const RandomMeasureModel& model,
                                 const std::vector<GgiPanelEntry>& entries,
                                 const GgiOptions& opt, Rng rng) {
  return run_ggi_panel(model, entries, opt, rng);
}

namespace {

struct MixtureAccumulator {
  // pattern key -> (n+1 wedge counts of the new overlap, total)
  std::map<std::uint64_t, std::vector<std::uint64_t>> cells;
  std::vector<std::uint64_t> marginal;  // interval counts of R_{1,2}
  Accumulator residual;
  std::uint64_t groups = 0;

  void merge(const MixtureAccumulator& o) {
    for (const auto& [key, counts] : o.cells) {
      auto& mine = cells[key];
      if (mine.empty()) mine = counts;
      else {
        for (std::size_t i = 0; i < counts.size(); ++i) mine[i] += counts[i];
      }
    }
    if (marginal.empty()) marginal = o.marginal;
    else {
      for (std::size_t i = 0; i < o.marginal.size(); ++i) marginal[i] += o.marginal[i];
    }
    residual.merge(o.residual);
    groups += o.groups;
  }
};

}  // namespace

MixtureLawResult mixture_law_check(const RandomMeasureModel& model, int n,
                                   const GgiOptions& opt, Rng rng) {
  if (n < 2) throw std::invalid_argument("mixture_law_check: n >= 2");
  const RSBDiscretization& disc = model.discretization();
  const int bins = disc.r + 1;
  const std::uint64_t measures =
      (opt.samples + static_cast<std::uint64_t>(opt.groups_per_measure) - 1) /
      static_cast<std::uint64_t>(opt.groups_per_measure);

  MixtureAccumulator total = chunked_reduce<MixtureAccumulator>(
      measures, opt.chunk, opt.workers, rng,
      [&](Rng& stream, std::uint64_t, std::uint64_t count, MixtureAccumulator& acc) {
        acc.marginal.assign(static_cast<std::size_t>(bins), 0);
        auto local = model.clone();
        ReplicaGroup group;
        for (std::uint64_t i = 0; i < count; ++i) {
          Rng draw = stream.substream(i);
          local->sample_measure(draw);
          acc.residual.add(local->residual());
          for (int gidx = 0; gidx < opt.groups_per_measure; ++gidx) {
            Rng grng = draw.substream(1000 + static_cast<std::uint64_t>(gidx));
            local->draw_group(n + 1, 1, grng, group);
            std::uint64_t key = 0;
            bool ok = true;
            for (int a = 0; a < n && ok; ++a) {
              for (int b = a + 1; b < n; ++b) {
                auto cls = disc.classify(group.overlaps.at(a, b));
                if (!cls) {
                  ok = false;
                  break;
                }
                key = key * static_cast<std::uint64_t>(bins) + static_cast<std::uint64_t>(*cls);
              }
            }
            auto new_cls = disc.classify(group.overlaps.at(0, n));
            auto marg_cls = disc.classify(group.overlaps.at(0, 1));
            if (!ok || !new_cls || !marg_cls) continue;
            auto& cell = acc.cells[key];
            if (cell.empty()) cell.assign(static_cast<std::size_t>(bins) + 1, 0);
            ++cell[static_cast<std::size_t>(*new_cls)];
            ++cell[static_cast<std::size_t>(bins)];
            ++acc.marginal[static_cast<std::size_t>(*marg_cls)];
            ++acc.groups;
          }
        }
      });

  MixtureLawResult out;
  out.groups = total.groups;
  out.mean_residual = total.residual.mean();
  out.cells = total.cells.size();
  double marg_total = 0.0;
  out.marginal.assign(static_cast<std::size_t>(bins), 0.0);
  for (int p = 0; p < bins; ++p) {
    out.marginal[static_cast<std::size_t>(p)] =
        static_cast<double>(total.marginal[static_cast<std::size_t>(p)]);
    marg_total += out.marginal[static_cast<std::size_t>(p)];
  }
  for (double& v : out.marginal) v /= std::max(1.0, marg_total);

  // Reconstruct each pattern's existing-overlap interval counts from the key.
  double weighted_tv = 0.0;
  double weight_total = 0.0;
  const int pair_count = n * (n - 1) / 2;
  for (const auto& [key, counts] : total.cells) {
    std::vector<int> pattern(static_cast<std::size_t>(pair_count));
    std::uint64_t k = key;
    for (int i = pair_count - 1; i >= 0; --i) {
      pattern[static_cast<std::size_t>(i)] = static_cast<int>(k % static_cast<std::uint64_t>(bins));
      k /= static_cast<std::uint64_t>(bins);
    }
    // Wedges of replica 1 with 2..n sit in the first n-1 pattern slots.
    std::vector<double> ref(static_cast<std::size_t>(bins), 0.0);
    for (int p = 0; p < bins; ++p) {
      ref[static_cast<std::size_t>(p)] = out.marginal[static_cast<std::size_t>(p)] / n;
    }
    for (int l = 0; l < n - 1; ++l) {
      ref[static_cast<std::size_t>(pattern[static_cast<std::size_t>(l)])] += 1.0 / n;
    }
    double cell_total = static_cast<double>(counts[static_cast<std::size_t>(bins)]);
    double tv = 0.0;
    for (int p = 0; p < bins; ++p) {
      double emp = static_cast<double>(counts[static_cast<std::size_t>(p)]) / cell_total;
      tv += std::fabs(emp - ref[static_cast<std::size_t>(p)]);
    }
    tv *= 0.5;
    weighted_tv += tv * cell_total;
    weight_total += cell_total;
  }
  out.tv_distance = weight_total > 0.0 ? weighted_tv / weight_total : 0.0;
  return out;
}

double PhiSpec::eval(const std::vector<double>& delta, const ReplicaGroup& g) const {
  for (const Box& box : boxes) {
    double v = delta[static_cast<std::size_t>(box.node)];
    if (v < box.lo || v >= box.hi) return 0.0;
  }
  double out = 1.0;
  for (const auto& [replica, coord] : spin_factors) {
    out *= g.spin(replica, coord);
  }
  return out;
}

namespace {

struct ReweightAccumulator {
  VectorAccumulator acc;  // (o, l_1..l_J, r_1..r_J) cluster means
  Accumulator residual;

  void merge(const ReweightAccumulator& o) {
    if (acc.dim() == 0) {
      *this = o;
      return;
    }
    if (o.acc.dim() == 0) return;
    acc.merge(o.acc);
    residual.merge(o.residual);
  }
};

}  // namespace

ReweightingResult reweighting_check(const RandomMeasureModel& model,
                                    const Configuration& config,
                                    const std::vector<double>& b_vertex,
                                    const std::vector<PhiSpec>& phis,
                                    const ReweightingOptions& opt, Rng rng) {
  const int n = config.n_replicas;
  if (n < 1) throw std::invalid_argument("reweighting_check: empty configuration");
  if (b_vertex.size() != config.nodes.size()) {
    throw std::invalid_argument("reweighting_check: one b per configuration vertex");
  }
  const RSBDiscretization& disc = model.discretization();
  if (config.depth != disc.r) {
    throw std::invalid_argument("reweighting_check: configuration depth mismatch");
  }
  const std::size_t n_nodes = config.nodes.size();
  const int J = static_cast<int>(phis.size());

  // Static configuration tables.
  std::vector<int> wedge_target(static_cast<std::size_t>(n) * n, disc.r);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      int w = config.wedge_of(a, b);
      wedge_target[static_cast<std::size_t>(a) * n + b] = w;
      wedge_target[static_cast<std::size_t>(b) * n + a] = w;
    }
  }
  std::vector<std::vector<int>> below(n_nodes);
  std::vector<int> pick(n_nodes);      // one replica below each vertex
  std::vector<int> depth_of(n_nodes);
  std::vector<bool> is_leaf(n_nodes);
  for (std::size_t t = 0; t < n_nodes; ++t) {
    below[t] = config.replicas_below(static_cast<int>(t));
    if (below[t].empty()) throw std::invalid_argument("reweighting_check: vertex without replicas");
    pick[t] = below[t].front();
    depth_of[t] = config.nodes[t].label.depth();
    is_leaf[t] = config.nodes[t].children.empty();
  }
  // Constant additive part: for each replica, sum over its picked vertices of
  // b_t * zeta(I_|t|).
  std::vector<double> ef_repl(static_cast<std::size_t>(n), 0.0);
  for (std::size_t t = 0; t < n_nodes; ++t) {
    ef_repl[static_cast<std::size_t>(pick[t])] +=
        b_vertex[t] * model.overlap_mass(depth_of[t]);
  }

  const int dim = 1 + 2 * J;
  const std::uint64_t measures =
      (opt.samples + static_cast<std::uint64_t>(opt.groups_per_measure) - 1) /
      static_cast<std::uint64_t>(opt.groups_per_measure);

  ReweightAccumulator total = chunked_reduce<ReweightAccumulator>(
      measures, opt.chunk, opt.workers, rng,
      [&](Rng& stream, std::uint64_t, std::uint64_t count, ReweightAccumulator& out_acc) {
        out_acc.acc.reset(dim);
        auto local = model.clone();
        ReplicaGroup group;
        std::vector<double> delta(n_nodes), tdelta(n_nodes), tilted(n_nodes);
        std::vector<double> atom_ov(static_cast<std::size_t>(n));
        std::vector<double> row(static_cast<std::size_t>(dim));
        for (std::uint64_t i = 0; i < count; ++i) {
          Rng draw = stream.substream(i);
          local->sample_measure(draw);
          out_acc.residual.add(local->residual());
          std::fill(row.begin(), row.end(), 0.0);
          for (int gidx = 0; gidx < opt.groups_per_measure; ++gidx) {
            Rng grng = draw.substream(1000 + static_cast<std::uint64_t>(gidx));
            local->draw_group(n, opt.m_window, grng, group);
            // Clustering event: every pair's classified overlap matches.
            bool in_event = true;
            for (int a = 0; a < n && in_event; ++a) {
              for (int b = a + 1; b < n; ++b) {
                auto cls = disc.classify(group.overlaps.at(a, b));
                if (!cls || *cls != wedge_target[static_cast<std::size_t>(a) * n + b]) {
                  in_event = false;
                  break;
                }
              }
            }
            if (!in_event) continue;
            row[0] += 1.0;

            // Partition weights and their tilted counterparts over the atoms.
            std::fill(delta.begin(), delta.end(), 0.0);
            std::fill(tdelta.begin(), tdelta.end(), 0.0);
            double mean_exp_f = 0.0;
            const int atoms = local->atom_count();
            for (int atom = 0; atom < atoms; ++atom) {
              double mass = local->atom_mass(atom);
              if (mass <= 0.0) continue;
              for (int l = 0; l < n; ++l) {
                atom_ov[static_cast<std::size_t>(l)] =
                    local->atom_overlap(atom, group.atoms[static_cast<std::size_t>(l)]);
              }
              double f_val = 0.0;
              for (std::size_t t = 0; t < n_nodes; ++t) {
                if (b_vertex[t] == 0.0) continue;
                if (disc.intervals[static_cast<std::size_t>(depth_of[t])].contains(
                        atom_ov[static_cast<std::size_t>(pick[t])])) {
                  f_val += b_vertex[t];
                }
              }
              double ef = std::exp(f_val);
              mean_exp_f += mass * ef;
              for (std::size_t t = 0; t < n_nodes; ++t) {
                bool member = true;
                if (is_leaf[t]) {
                  double q_top = disc.q(depth_of[t]);
                  for (int l : below[t]) {
                    if (atom_ov[static_cast<std::size_t>(l)] < q_top) {
                      member = false;
                      break;
                    }
                  }
                } else {
                  const Interval& iv = disc.intervals[static_cast<std::size_t>(depth_of[t])];
                  for (int l : below[t]) {
                    if (!iv.contains(atom_ov[static_cast<std::size_t>(l)])) {
                      member = false;
                      break;
                    }
                  }
                }
                if (member) {
                  delta[t] += mass;
                  tdelta[t] += mass * ef;
                }
              }
            }
            for (std::size_t t = 0; t < n_nodes; ++t) tilted[t] = tdelta[t] / mean_exp_f;

            // Reweighting factor from the replicas themselves.
            double log_z = -static_cast<double>(n) * std::log(mean_exp_f);
            for (int l = 0; l < n; ++l) {
              double f_l = ef_repl[static_cast<std::size_t>(l)];
              for (std::size_t t = 0; t < n_nodes; ++t) {
                if (b_vertex[t] == 0.0) continue;
                double ov = group.overlaps.at(l, pick[t]);
                bool in_interval =
                    disc.intervals[static_cast<std::size_t>(depth_of[t])].contains(ov);
                if (in_interval) {
                  f_l += b_vertex[t];
                  // Remove the replica's own-vertex term.
                  if (pick[t] == l) f_l -= b_vertex[t];
                }
              }
              log_z += f_l;
            }
            double z = std::exp(log_z);
            for (int j = 0; j < J; ++j) {
              row[static_cast<std::size_t>(1 + j)] += phis[static_cast<std::size_t>(j)].eval(delta, group);
              row[static_cast<std::size_t>(1 + J + j)] +=
                  phis[static_cast<std::size_t>(j)].eval(tilted, group) * z;
            }
          }
          for (double& v : row) v /= opt.groups_per_measure;
          out_acc.acc.add(row);
          std::fill(row.begin(), row.end(), 0.0);
        }
      });

  ReweightingResult result;
  result.groups = total.acc.count() * static_cast<std::uint64_t>(opt.groups_per_measure);
  result.mean_residual = total.residual.mean();
  double o_bar = total.acc.mean(0);
  result.event_rate = o_bar;
  if (!(o_bar > 0.0)) {
    throw std::runtime_error("reweighting_check: clustering event has zero empirical mass");
  }
  for (int j = 0; j < J; ++j) {
    ReweightingPhiResult pr;
    pr.label = phis[static_cast<std::size_t>(j)].label;
    double l_bar = total.acc.mean(1 + j);
    double r_bar = total.acc.mean(1 + J + j);
    pr.lhs = l_bar / o_bar;
    pr.rhs = r_bar / o_bar;
    pr.diff = (l_bar - r_bar) / o_bar;
    std::vector<double> grad(static_cast<std::size_t>(dim), 0.0);
    grad[0] = -(l_bar - r_bar) / (o_bar * o_bar);
    grad[static_cast<std::size_t>(1 + j)] = 1.0 / o_bar;
    grad[static_cast<std::size_t>(1 + J + j)] = -1.0 / o_bar;
    pr.se = total.acc.linear_se(grad);
    result.phis.push_back(pr);
  }
  return result;
}

}  // namespace glasslab
