#include "glasslab/gibbs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>

namespace glasslab {

std::uint32_t spin_mask(const SpinConfiguration& sigma) {
  if (sigma.size() > 32) throw capacity_error("spin_mask: more than 32 sites");
  std::uint32_t m = 0;
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma.s[static_cast<std::size_t>(i)] < 0) m |= (1u << i);
  }
  return m;
}

SpinConfiguration spins_from_mask(std::uint32_t mask, int n) {
  SpinConfiguration out;
  out.s.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.s[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? -1 : 1;
  }
  return out;
}

SKInstance SKInstance::sample(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("SKInstance: n >= 1");
  SKInstance inst;
  inst.n = n;
  inst.g.resize(static_cast<std::size_t>(n) * n);
  for (double& v : inst.g) v = rng.next_normal();
  return inst;
}

double sk_energy(const SKInstance& inst, const SpinConfiguration& sigma) {
  if (sigma.size() != inst.n) throw std::invalid_argument("sk_energy: size mismatch");
  double h = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    double si = sigma.s[static_cast<std::size_t>(i)];
    const double* row = &inst.g[static_cast<std::size_t>(i) * inst.n];
    double acc = 0.0;
    for (int j = 0; j < inst.n; ++j) acc += row[j] * sigma.s[static_cast<std::size_t>(j)];
    h += si * acc;
  }
  return h / std::sqrt(static_cast<double>(inst.n));
}

KSatInstance KSatInstance::sample(int n, int k, double alpha, Rng& rng) {
  if (n < 1 || k < 1 || alpha <= 0.0) throw std::invalid_argument("KSatInstance: bad parameters");
  KSatInstance inst;
  inst.n = n;
  inst.k = k;
  inst.alpha = alpha;
  inst.clause_count = static_cast<int>(rng.next_poisson(alpha * n));
  inst.signs.resize(static_cast<std::size_t>(inst.clause_count) * k);
  inst.index.resize(static_cast<std::size_t>(inst.clause_count) * k);
  for (std::size_t j = 0; j < inst.signs.size(); ++j) {
    inst.signs[j] = (rng.next_u64() & 1u) ? 1 : -1;
    inst.index[j] = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(n)));
  }
  return inst;
}

double ksat_energy(const KSatInstance& inst, const SpinConfiguration& sigma) {
  if (sigma.size() != inst.n) throw std::invalid_argument("ksat_energy: size mismatch");
  double total = 0.0;
  for (int c = 0; c < inst.clause_count; ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * inst.k;
    bool all_match = true;
    for (int j = 0; j < inst.k; ++j) {
      std::int32_t site = inst.index[base + static_cast<std::size_t>(j)];
      if (site < 0 || site >= inst.n) {
        throw std::runtime_error("ksat_energy: corrupt instance, site index out of range");
      }
      if (inst.signs[base + static_cast<std::size_t>(j)] * sigma.s[static_cast<std::size_t>(site)] != 1) {
        all_match = false;
        break;
      }
    }
    if (all_match) total += 1.0;
  }
  return total;
}

void PerturbationParams::validate() const {
  if (x.empty()) throw std::invalid_argument("PerturbationParams: p_max >= 1");
  for (double v : x) {
    if (v < 0.0 || v > 3.0) {
      throw std::invalid_argument("PerturbationParams: x_p must lie in [0,3]");
    }
  }
  if (s < 0.0) throw std::invalid_argument("PerturbationParams: s >= 0");
}

PerturbationParams PerturbationParams::uniform_x(int p_max, double value, double s) {
  PerturbationParams p;
  p.x.assign(static_cast<std::size_t>(p_max), value);
  p.s = s;
  p.validate();
  return p;
}

double perturbation_truncation_bias(int p_max) {
  return 3.0 * std::pow(2.0, -p_max);
}

double perturbation_strength_schedule(int n_sites, double gamma) {
  if (!(gamma > 0.25) || !(gamma < 0.5)) {
    throw std::invalid_argument("perturbation strength schedule requires gamma in (1/4,1/2)");
  }
  return std::pow(static_cast<double>(n_sites), gamma);
}

PerturbationField PerturbationField::build(int n_sites, const PerturbationParams& params,
                                           Rng& rng) {
  params.validate();
  if (n_sites < 1) throw std::invalid_argument("PerturbationField: n >= 1");
  if (n_sites > kMaxSites) {
    throw capacity_error("PerturbationField: joint field supported up to 24 sites");
  }
  const int p_max = params.p_max();
  const double n = static_cast<double>(n_sites);

  // t[m] after j steps: number of j-tuples of sites with m odd-multiplicity
  // values. Appending a site either evens one of the m odd values or odds a
  // new one.
  std::vector<std::vector<double>> tuples(static_cast<std::size_t>(p_max + 1),
                                          std::vector<double>(static_cast<std::size_t>(p_max + 1), 0.0));
  {
    std::vector<double> cur(static_cast<std::size_t>(p_max + 2), 0.0);
    cur[0] = 1.0;
    for (int j = 1; j <= p_max; ++j) {
      std::vector<double> nxt(static_cast<std::size_t>(p_max + 2), 0.0);
      for (int m = 0; m <= std::min(j - 1, p_max); ++m) {
        if (cur[static_cast<std::size_t>(m)] == 0.0) continue;
        if (m + 1 <= p_max + 1) {
          nxt[static_cast<std::size_t>(m + 1)] += cur[static_cast<std::size_t>(m)] * (n - m);
        }
        if (m >= 1) nxt[static_cast<std::size_t>(m - 1)] += cur[static_cast<std::size_t>(m)] * m;
      }
      for (int m = 0; m <= p_max; ++m) {
        tuples[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] = nxt[static_cast<std::size_t>(m)];
      }
      cur = nxt;
    }
  }

  // Per-popcount coefficient standard deviations.
  std::vector<double> sd(static_cast<std::size_t>(n_sites + 1), 0.0);
  for (int k = 0; k <= std::min(n_sites, p_max); ++k) {
    double binom = 1.0;
    for (int i = 0; i < k; ++i) binom = binom * (n - i) / (i + 1);
    double var = 0.0;
    for (int p = std::max(k, 1); p <= p_max; ++p) {
      if ((p - k) % 2 != 0) continue;
      double t_pk = tuples[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] / binom;
      double xp = params.x[static_cast<std::size_t>(p - 1)];
      var += std::pow(0.25, p) * xp * xp * std::pow(n, -p) * t_pk;
    }
    sd[static_cast<std::size_t>(k)] = std::sqrt(var);
  }

  PerturbationField field;
  field.n_ = n_sites;
  const std::size_t size = std::size_t{1} << n_sites;
  field.table_.assign(size, 0.0);
  for (std::size_t s = 0; s < size; ++s) {
    int pc = std::popcount(s);
    if (pc <= p_max && sd[static_cast<std::size_t>(pc)] > 0.0) {
      field.table_[s] = sd[static_cast<std::size_t>(pc)] * rng.next_normal();
    }
  }
  // In-place Walsh-Hadamard transform turns coefficients into field values.
  for (std::size_t len = 1; len < size; len <<= 1) {
    for (std::size_t i = 0; i < size; i += (len << 1)) {
      for (std::size_t j = i; j < i + len; ++j) {
        double a = field.table_[j];
        double b = field.table_[j + len];
        field.table_[j] = a + b;
        field.table_[j + len] = a - b;
      }
    }
  }
  return field;
}

double PerturbationField::value(const SpinConfiguration& sigma) const {
  if (sigma.size() != n_) throw std::invalid_argument("PerturbationField: size mismatch");
  return table_[spin_mask(sigma)];
}

int GibbsEnsemble::n_sites() const {
  return std::visit([](const auto& inst) { return inst.n; }, instance);
}

double GibbsEnsemble::base_energy(const SpinConfiguration& sigma) const {
  if (std::holds_alternative<SKInstance>(instance)) {
    return sk_energy(std::get<SKInstance>(instance), sigma);
  }
  return ksat_energy(std::get<KSatInstance>(instance), sigma);
}

double GibbsEnsemble::perturbed_energy(const SpinConfiguration& sigma) const {
  if (!perturbation_field || !perturbation_params) {
    throw std::logic_error("perturbed_energy: no perturbation attached");
  }
  return base_energy(sigma) -
         perturbation_params->s / beta * perturbation_field->value(sigma);
}

double GibbsEnsemble::log_weight(const SpinConfiguration& sigma) const {
  double lw = -beta * base_energy(sigma);
  if (perturbation_field) {
    lw += perturbation_params->s * perturbation_field->value(sigma);
  }
  return lw;
}

GibbsEnsemble make_sk_ensemble(SKInstance inst, double beta) {
  if (beta < 0.0) throw std::invalid_argument("beta >= 0 required");
  GibbsEnsemble e;
  e.instance = std::move(inst);
  e.beta = beta;
  return e;
}

GibbsEnsemble make_ksat_ensemble(KSatInstance inst, double beta) {
  if (beta < 0.0) throw std::invalid_argument("beta >= 0 required");
  GibbsEnsemble e;
  e.instance = std::move(inst);
  e.beta = beta;
  return e;
}

void attach_perturbation(GibbsEnsemble& ensemble, const PerturbationParams& params, Rng& rng) {
  ensemble.perturbation_params = params;
  ensemble.perturbation_field = PerturbationField::build(ensemble.n_sites(), params, rng);
}

namespace {

// Log weights for every configuration, written into `lw` (size 2^n).
void log_weight_table(const GibbsEnsemble& ensemble, std::vector<double>& lw) {
  const int n = ensemble.n_sites();
  const std::size_t size = std::size_t{1} << n;
  lw.assign(size, 0.0);

  if (std::holds_alternative<KSatInstance>(ensemble.instance)) {
    const KSatInstance& inst = std::get<KSatInstance>(ensemble.instance);
    // Each clause contributes on an affine subcube of configurations.
    for (int c = 0; c < inst.clause_count; ++c) {
      const std::size_t base = static_cast<std::size_t>(c) * inst.k;
      std::uint32_t fixed = 0, value = 0;
      bool conflict = false;
      for (int j = 0; j < inst.k && !conflict; ++j) {
        std::uint32_t bit = 1u << inst.index[base + static_cast<std::size_t>(j)];
        std::uint32_t want = inst.signs[base + static_cast<std::size_t>(j)] < 0 ? bit : 0u;
        if (fixed & bit) {
          if ((value & bit) != want) conflict = true;
        } else {
          fixed |= bit;
          value |= want;
        }
      }
      if (conflict) continue;
      std::uint32_t free_mask = static_cast<std::uint32_t>(size - 1) & ~fixed;
      std::uint32_t sub = free_mask;
      for (;;) {
        lw[value | sub] -= ensemble.beta;
        if (sub == 0) break;
        sub = (sub - 1) & free_mask;
      }
    }
  } else {
    const SKInstance& inst = std::get<SKInstance>(ensemble.instance);
    // Gray-code walk with O(n) updates per step.
    std::vector<double> sym(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        sym[static_cast<std::size_t>(i) * n + j] =
            inst.g[static_cast<std::size_t>(i) * n + j] + inst.g[static_cast<std::size_t>(j) * n + i];
      }
    }
    std::vector<double> sigma(static_cast<std::size_t>(n), 1.0);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    double diag = 0.0;
    for (int i = 0; i < n; ++i) diag += inst.g[static_cast<std::size_t>(i) * n + i];
    double offdiag = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) offdiag += inst.g[static_cast<std::size_t>(i) * n + j];
      }
    }
    double energy = (diag + offdiag) * inv_sqrt_n;  // all-plus configuration
    std::uint32_t gray = 0;
    for (std::size_t step = 0;; ++step) {
      lw[gray] = -ensemble.beta * energy;
      if (step + 1 >= size) break;
      int k = std::countr_zero(step + 1);
      double acc = 0.0;
      const double* row = &sym[static_cast<std::size_t>(k) * n];
      for (int j = 0; j < n; ++j) {
        if (j != k) acc += row[j] * sigma[static_cast<std::size_t>(j)];
      }
      energy -= 2.0 * sigma[static_cast<std::size_t>(k)] * acc * inv_sqrt_n;
      sigma[static_cast<std::size_t>(k)] = -sigma[static_cast<std::size_t>(k)];
      gray ^= (1u << k);
    }
  }

  if (ensemble.perturbation_field) {
    const double s = ensemble.perturbation_params->s;
    for (std::size_t m = 0; m < size; ++m) {
      lw[m] += s * ensemble.perturbation_field->value_mask(static_cast<std::uint32_t>(m));
    }
  }
}

}  // namespace

std::vector<double> log_weight_vector(const GibbsEnsemble& ensemble) {
  if (ensemble.n_sites() > 24) {
    throw capacity_error("log_weight_vector: exact mode supports up to 24 sites");
  }
  std::vector<double> lw;
  log_weight_table(ensemble, lw);
  return lw;
}

double log_sum_exp(const std::vector<double>& values) {
  double max_v = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max_v);
  return max_v + std::log(sum);
}

GibbsTable enumerate_gibbs(const GibbsEnsemble& ensemble) {
  const int n = ensemble.n_sites();
  if (n > 24) throw capacity_error("enumerate_gibbs: exact mode supports up to 24 sites");
  const std::size_t size = std::size_t{1} << n;
  GibbsTable table;
  log_weight_table(ensemble, table.prob);
  double max_lw = *std::max_element(table.prob.begin(), table.prob.end());
  double sum = 0.0;
  for (std::size_t m = 0; m < size; ++m) {
    table.prob[m] = std::exp(table.prob[m] - max_lw);
    sum += table.prob[m];
  }
  for (std::size_t m = 0; m < size; ++m) table.prob[m] /= sum;
  table.log_z = max_lw + std::log(sum);
  table.z = std::exp(table.log_z);
  table.free_energy = table.log_z / static_cast<double>(n);
  return table;
}

std::vector<SpinConfiguration> metropolis_replicas(const GibbsEnsemble& ensemble,
                                                   int n_replicas, int sweeps, Rng& rng,
                                                   const McmcOptions& opt,
                                                   McmcDiagnostics* diag) {
  const int n = ensemble.n_sites();
  if (n_replicas < 1 || sweeps < 1) throw std::invalid_argument("metropolis: bad sizes");
  if (ensemble.perturbation_field && n > PerturbationField::kMaxSites) {
    throw capacity_error("metropolis: perturbed chains need the joint field table");
  }
  const bool is_sk = std::holds_alternative<SKInstance>(ensemble.instance);
  const SKInstance* sk = is_sk ? &std::get<SKInstance>(ensemble.instance) : nullptr;
  const KSatInstance* ks = is_sk ? nullptr : &std::get<KSatInstance>(ensemble.instance);

  std::vector<double> sym;
  std::vector<std::vector<std::int32_t>> site_clauses;
  if (is_sk) {
    sym.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        sym[static_cast<std::size_t>(i) * n + j] =
            sk->g[static_cast<std::size_t>(i) * n + j] + sk->g[static_cast<std::size_t>(j) * n + i];
      }
    }
  } else {
    site_clauses.assign(static_cast<std::size_t>(n), {});
    for (int c = 0; c < ks->clause_count; ++c) {
      for (int j = 0; j < ks->k; ++j) {
        site_clauses[static_cast<std::size_t>(
            ks->index[static_cast<std::size_t>(c) * ks->k + static_cast<std::size_t>(j)])]
            .push_back(c);
      }
    }
    for (auto& v : site_clauses) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }

  auto clause_value = [&](const std::vector<std::int8_t>& s, int c) -> int {
    const std::size_t base = static_cast<std::size_t>(c) * ks->k;
    for (int j = 0; j < ks->k; ++j) {
      if (ks->signs[base + static_cast<std::size_t>(j)] *
              s[static_cast<std::size_t>(ks->index[base + static_cast<std::size_t>(j)])] !=
          1) {
        return 0;
      }
    }
    return 1;
  };

  std::vector<SpinConfiguration> replicas(static_cast<std::size_t>(n_replicas));
  std::uint64_t accepted = 0, proposed = 0;
  Accumulator autocorr_acc;

  for (int rep = 0; rep < n_replicas; ++rep) {
    Rng chain = rng.substream(static_cast<std::uint64_t>(rep));
    SpinConfiguration state;
    state.s.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) state.s[static_cast<std::size_t>(i)] = (chain.next_u64() & 1u) ? 1 : -1;

    std::vector<double> local(static_cast<std::size_t>(n), 0.0);
    if (is_sk) {
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
          if (j != i) acc += sym[static_cast<std::size_t>(i) * n + j] * state.s[static_cast<std::size_t>(j)];
        }
        local[static_cast<std::size_t>(i)] = acc;
      }
    }
    std::uint32_t mask = ensemble.perturbation_field ? spin_mask(state) : 0u;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    const double s_pert = ensemble.perturbation_params ? ensemble.perturbation_params->s : 0.0;

    double prev_energy = 0.0;
    bool have_prev = false;
    double prev_product_sum = 0.0;
    std::uint64_t lag_count = 0;
    Accumulator energy_acc;

    const int total_sweeps = opt.burnin_sweeps + sweeps;
    for (int sweep = 0; sweep < total_sweeps; ++sweep) {
      for (int step = 0; step < n; ++step) {
        int k = static_cast<int>(chain.next_below(static_cast<std::uint64_t>(n)));
        double delta_h;
        if (is_sk) {
          delta_h = -2.0 * state.s[static_cast<std::size_t>(k)] * local[static_cast<std::size_t>(k)] * inv_sqrt_n;
        } else {
          int before = 0, after = 0;
          state.s[static_cast<std::size_t>(k)] = -state.s[static_cast<std::size_t>(k)];
          for (std::int32_t c : site_clauses[static_cast<std::size_t>(k)]) after += clause_value(state.s, c);
          state.s[static_cast<std::size_t>(k)] = -state.s[static_cast<std::size_t>(k)];
          for (std::int32_t c : site_clauses[static_cast<std::size_t>(k)]) before += clause_value(state.s, c);
          delta_h = static_cast<double>(after - before);
        }
        double log_alpha = -ensemble.beta * delta_h;
        if (ensemble.perturbation_field) {
          log_alpha += s_pert * (ensemble.perturbation_field->value_mask(mask ^ (1u << k)) -
                                 ensemble.perturbation_field->value_mask(mask));
        }
        ++proposed;
        if (log_alpha >= 0.0 || std::log(chain.next_unit_open()) < log_alpha) {
          ++accepted;
          if (is_sk) {
            for (int j = 0; j < n; ++j) {
              if (j != k) {
                local[static_cast<std::size_t>(j)] -= 2.0 * state.s[static_cast<std::size_t>(k)] *
                                                      sym[static_cast<std::size_t>(j) * n + k];
              }
            }
          }
          state.s[static_cast<std::size_t>(k)] = -state.s[static_cast<std::size_t>(k)];
          mask ^= (1u << k);
        }
      }
      if (diag && sweep >= opt.burnin_sweeps && (sweep - opt.burnin_sweeps) % opt.thin_sweeps == 0) {
        double e = ensemble.base_energy(state);
        energy_acc.add(e);
        if (have_prev) {
          prev_product_sum += prev_energy * e;
          ++lag_count;
        }
        prev_energy = e;
        have_prev = true;
      }
    }
    // The chain records only its final state per replica; honest replica
    // independence comes from running one chain per replica.
    replicas[static_cast<std::size_t>(rep)] = state;
    if (diag && lag_count > 0 && energy_acc.variance() > 0.0) {
      double m = energy_acc.mean();
      autocorr_acc.add((prev_product_sum / static_cast<double>(lag_count) - m * m) /
                       energy_acc.variance());
    }
  }
  if (diag) {
    diag->acceptance_rate = proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
    diag->energy_autocorr_lag1 = autocorr_acc.count() ? autocorr_acc.mean() : 0.0;
  }
  return replicas;
}

OverlapMatrix OverlapMatrix::identity_like(int n) {
  OverlapMatrix m;
  m.n = n;
  m.a.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

OverlapMatrix overlap_matrix(const std::vector<SpinConfiguration>& replicas) {
  if (replicas.empty()) throw std::invalid_argument("overlap_matrix: no replicas");
  const int n = static_cast<int>(replicas.size());
  const int sites = replicas[0].size();
  for (const auto& r : replicas) {
    if (r.size() != sites) throw std::invalid_argument("overlap_matrix: length mismatch");
  }
  OverlapMatrix m = OverlapMatrix::identity_like(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      long acc = 0;
      for (int t = 0; t < sites; ++t) {
        acc += replicas[static_cast<std::size_t>(i)].s[static_cast<std::size_t>(t)] *
               replicas[static_cast<std::size_t>(j)].s[static_cast<std::size_t>(t)];
      }
      double v = static_cast<double>(acc) / sites;
      m.at(i, j) = v;
      m.at(j, i) = v;
    }
  }
  return m;
}

ConcentrationTable concentration_probe(ModelFamily family, const std::vector<int>& n_list,
                                       double beta, int k, double alpha, double gamma,
                                       int trials, Rng& rng) {
  if (trials < 8) throw std::invalid_argument("concentration_probe: trials >= 8");
  ConcentrationTable out;
  std::vector<double> log_n, log_mad;
  for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
    int n = n_list[idx];
    if (n > 20) throw capacity_error("concentration_probe: exact mode capped at 20 sites");
    double s = perturbation_strength_schedule(n, gamma);
    std::vector<double> phis(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
      Rng disorder = rng.substream(idx, static_cast<std::uint64_t>(t));
      Rng x_stream = disorder.substream(1);
      Rng pert_stream = disorder.substream(2);
      PerturbationParams params;
      params.x.resize(8);
      for (double& xp : params.x) xp = 1.0 + x_stream.next_unit();
      params.s = s;
      GibbsEnsemble ensemble =
          family == ModelFamily::sk
              ? make_sk_ensemble(SKInstance::sample(n, disorder), beta)
              : make_ksat_ensemble(KSatInstance::sample(n, k, alpha, disorder), beta);
      attach_perturbation(ensemble, params, pert_stream);
      phis[static_cast<std::size_t>(t)] = enumerate_gibbs(ensemble).log_z;
    }
    double mean = 0.0;
    for (double p : phis) mean += p;
    mean /= static_cast<double>(trials);
    Accumulator mad;
    for (double p : phis) mad.add(std::fabs(p - mean));
    ConcentrationRow row;
    row.n_sites = n;
    row.mad = mad.estimate();
    row.bound_ratio = row.mad.value / (s + std::sqrt(alpha * n));
    out.rows.push_back(row);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_mad.push_back(std::log(std::max(row.mad.value, 1e-12)));
  }
  if (out.rows.size() >= 3) out.growth = linear_fit(log_n, log_mad);
  return out;
}

void write_instance(std::ostream& os, const SKInstance& inst, double beta, std::uint64_t seed) {
  os << "{\"schema_version\":1,\"model\":\"sk\",\"n\":" << inst.n << ",\"beta\":" << beta
     << ",\"seed\":" << seed << "}\n";
  os << "i,j,g\n";
  for (int i = 0; i < inst.n; ++i) {
    for (int j = 0; j < inst.n; ++j) {
      os << i << ',' << j << ',' << inst.g[static_cast<std::size_t>(i) * inst.n + j] << '\n';
    }
  }
}

void write_instance(std::ostream& os, const KSatInstance& inst, double beta, std::uint64_t seed) {
  os << "{\"schema_version\":1,\"model\":\"ksat\",\"n\":" << inst.n << ",\"k\":" << inst.k
     << ",\"alpha\":" << inst.alpha << ",\"beta\":" << beta
     << ",\"clause_count\":" << inst.clause_count << ",\"seed\":" << seed << "}\n";
  os << "clause,position,sign,site\n";
  for (int c = 0; c < inst.clause_count; ++c) {
    for (int j = 0; j < inst.k; ++j) {
      std::size_t at = static_cast<std::size_t>(c) * inst.k + static_cast<std::size_t>(j);
      os << c << ',' << j << ',' << static_cast<int>(inst.signs[at]) << ',' << inst.index[at]
         << '\n';
    }
  }
}

void write_replicas(std::ostream& os, const std::vector<SpinConfiguration>& replicas) {
  for (const auto& r : replicas) {
    for (int i = 0; i < r.size(); ++i) {
      if (i) os << ',';
      os << static_cast<int>(r.s[static_cast<std::size_t>(i)]);
    }
    os << '\n';
  }
}

}  // namespace glasslab
