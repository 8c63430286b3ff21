#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "glasslab/gibbs.hpp"
#include "glasslab/stats.hpp"

using namespace glasslab;

namespace {

SpinConfiguration all_plus(int n) {
  SpinConfiguration s;
  s.s.assign(static_cast<std::size_t>(n), 1);
  return s;
}

}  // namespace

TEST_CASE("ksat energy counts fully matched clauses") {
  KSatInstance inst;
  inst.n = 2;
  inst.k = 1;
  inst.alpha = 1.0;
  inst.clause_count = 1;
  inst.signs = {1};
  inst.index = {0};
  SpinConfiguration plus = all_plus(2);
  CHECK(ksat_energy(inst, plus) == 1.0);
  SpinConfiguration minus = plus;
  minus.s[0] = -1;
  CHECK(ksat_energy(inst, minus) == 0.0);

  Rng rng(1);
  KSatInstance big = KSatInstance::sample(10, 3, 2.0, rng);
  for (int rep = 0; rep < 50; ++rep) {
    SpinConfiguration sigma;
    for (int i = 0; i < 10; ++i) sigma.s.push_back((rng.next_u64() & 1) ? 1 : -1);
    double e = ksat_energy(big, sigma);
    CHECK(e >= 0.0);
    CHECK(e <= big.clause_count);
    CHECK(e == std::floor(e));
  }
}

TEST_CASE("sk energy: zeros, global flip symmetry, and a 4-configuration oracle") {
  SKInstance zero;
  zero.n = 3;
  zero.g.assign(9, 0.0);
  CHECK(sk_energy(zero, all_plus(3)) == 0.0);

  Rng rng(2);
  SKInstance inst = SKInstance::sample(2, rng);
  for (std::uint32_t mask = 0; mask < 4; ++mask) {
    SpinConfiguration sigma = spins_from_mask(mask, 2);
    SpinConfiguration flipped = sigma;
    for (auto& s : flipped.s) s = -s;
    CHECK(sk_energy(inst, sigma) == doctest::Approx(sk_energy(inst, flipped)).epsilon(1e-12));

    // brute force: explicit double loop
    double direct = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        direct += inst.g[static_cast<std::size_t>(i) * 2 + j] * sigma.s[i] * sigma.s[j];
      }
    }
    direct /= std::sqrt(2.0);
    CHECK(sk_energy(inst, sigma) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("symmetry between sites: joint relabeling leaves energies unchanged") {
  Rng rng(3);
  const int n = 8;
  SKInstance sk = SKInstance::sample(n, rng);
  KSatInstance ks = KSatInstance::sample(n, 2, 1.0, rng);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);

  SKInstance sk_p = sk;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      sk_p.g[static_cast<std::size_t>(perm[i]) * n + perm[j]] =
          sk.g[static_cast<std::size_t>(i) * n + j];
    }
  }
  KSatInstance ks_p = ks;
  for (std::size_t t = 0; t < ks.index.size(); ++t) {
    ks_p.index[t] = perm[static_cast<std::size_t>(ks.index[t])];
  }
  for (int rep = 0; rep < 30; ++rep) {
    SpinConfiguration sigma;
    for (int i = 0; i < n; ++i) sigma.s.push_back((rng.next_u64() & 1) ? 1 : -1);
    SpinConfiguration sigma_p;
    sigma_p.s.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sigma_p.s[static_cast<std::size_t>(perm[i])] = sigma.s[i];
    CHECK(sk_energy(sk, sigma) == doctest::Approx(sk_energy(sk_p, sigma_p)).epsilon(1e-12));
    CHECK(ksat_energy(ks, sigma) == ksat_energy(ks_p, sigma_p));
  }
}

TEST_CASE("perturbation field: zero parameters give the zero field") {
  Rng rng(4);
  PerturbationParams params = PerturbationParams::uniform_x(8, 0.0, 1.0);
  PerturbationField field = PerturbationField::build(6, params, rng);
  for (std::uint32_t m = 0; m < 64; ++m) CHECK(field.value_mask(m) == 0.0);
}

TEST_CASE("perturbation variance stays below 3 and per-term variance is 1") {
  Rng rng(5);
  const int n = 10;
  SpinConfiguration sigma = spins_from_mask(0x2b5, n);
  PerturbationParams full = PerturbationParams::uniform_x(8, 3.0, 1.0);
  Accumulator var_full;
  for (int i = 0; i < 4000; ++i) {
    var_full.add(PerturbationField::build(n, full, rng).value(sigma));
  }
  CHECK(var_full.variance() < 3.0);
  CHECK(var_full.variance() > 2.5);  // sum_p 4^-p x_p^2 = 3 (1 - 4^-8) at x=3
  CHECK(std::fabs(var_full.mean()) < 5.0 * var_full.se());

  for (int p : {1, 2, 3}) {
    PerturbationParams single;
    single.x.assign(static_cast<std::size_t>(p), 0.0);
    single.x.back() = 1.0;
    single.s = 1.0;
    Accumulator acc;
    for (int i = 0; i < 4000; ++i) {
      acc.add(std::pow(2.0, p) * PerturbationField::build(n, single, rng).value(sigma));
    }
    CHECK(acc.variance() == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("perturbation covariance follows the overlap polynomial") {
  // The spectral construction must reproduce E g(s)g(s') = sum_p 4^-p x_p^2 R^p.
  Rng rng(6);
  const int n = 12;
  PerturbationParams params = PerturbationParams::uniform_x(6, 2.0, 1.0);
  SpinConfiguration a = spins_from_mask(0x000, n);
  SpinConfiguration b = spins_from_mask(0x00f, n);  // overlap (12-8)/12 = 1/3
  double r = 1.0 / 3.0;
  double expected = 0.0;
  for (int p = 1; p <= 6; ++p) expected += std::pow(0.25, p) * 4.0 * std::pow(r, p);
  VectorAccumulator acc(2);
  for (int i = 0; i < 60000; ++i) {
    PerturbationField f = PerturbationField::build(n, params, rng);
    acc.add(std::vector<double>{f.value(a), f.value(b)});
  }
  double cov = acc.covariance(0, 1);
  CHECK(cov == doctest::Approx(expected).epsilon(0.08));
}

TEST_CASE("perturbed energy contracts") {
  Rng rng(7);
  GibbsEnsemble e = make_ksat_ensemble(KSatInstance::sample(6, 2, 1.0, rng), 1.5);
  SpinConfiguration sigma = all_plus(6);
  CHECK_THROWS_AS(e.perturbed_energy(sigma), std::logic_error);

  // s = 0: perturbed energy equals the base energy.
  PerturbationParams p0 = PerturbationParams::uniform_x(8, 1.5, 0.0);
  Rng f0(100);
  attach_perturbation(e, p0, f0);
  CHECK(e.perturbed_energy(sigma) == e.base_energy(sigma));

  // Affine in s with the field held fixed.
  auto value_at = [&](double s) {
    GibbsEnsemble tmp = make_ksat_ensemble(std::get<KSatInstance>(e.instance), 1.5);
    PerturbationParams ps = PerturbationParams::uniform_x(8, 1.5, s);
    Rng fs(100);
    attach_perturbation(tmp, ps, fs);
    return tmp.perturbed_energy(sigma);
  };
  double v0 = value_at(0.0), v1 = value_at(0.7), v2 = value_at(1.4);
  CHECK(v2 - v1 == doctest::Approx(v1 - v0).epsilon(1e-10));
}

TEST_CASE("strength schedule accepts only exponents in (1/4, 1/2)") {
  CHECK(perturbation_strength_schedule(16, 0.4) == doctest::Approx(std::pow(16.0, 0.4)));
  CHECK_THROWS_AS(perturbation_strength_schedule(16, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(perturbation_strength_schedule(16, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(perturbation_strength_schedule(16, 0.6), std::invalid_argument);
  CHECK(perturbation_truncation_bias(8) == doctest::Approx(3.0 / 256.0));
}

TEST_CASE("enumeration: uniform at beta 0 and a 4-row oracle") {
  Rng rng(8);
  GibbsEnsemble e = make_ksat_ensemble(KSatInstance::sample(5, 2, 1.0, rng), 0.0);
  GibbsTable t = enumerate_gibbs(e);
  CHECK(t.log_z == doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-12));
  for (double p : t.prob) CHECK(p == doctest::Approx(1.0 / 32.0).epsilon(1e-12));

  KSatInstance toy;
  toy.n = 2;
  toy.k = 1;
  toy.alpha = 0.5;
  toy.clause_count = 1;
  toy.signs = {1};
  toy.index = {0};
  GibbsEnsemble te = make_ksat_ensemble(toy, 1.0);
  GibbsTable tt = enumerate_gibbs(te);
  // Hand computation over the four rows.
  double w[4];
  double z = 0.0;
  for (std::uint32_t m = 0; m < 4; ++m) {
    w[m] = std::exp(-((m & 1u) ? 0.0 : 1.0));
    z += w[m];
  }
  double total = 0.0;
  for (std::uint32_t m = 0; m < 4; ++m) {
    CHECK(tt.prob[m] == doctest::Approx(w[m] / z).epsilon(1e-12));
    total += tt.prob[m];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tt.free_energy == doctest::Approx(std::log(z) / 2.0).epsilon(1e-12));
}

TEST_CASE("enumeration log-weight paths agree with direct evaluation") {
  Rng rng(9);
  for (bool use_sk : {false, true}) {
    const int n = 10;
    GibbsEnsemble e = use_sk
                          ? make_sk_ensemble(SKInstance::sample(n, rng), 0.7)
                          : make_ksat_ensemble(KSatInstance::sample(n, 3, 1.5, rng), 0.7);
    PerturbationParams pp = PerturbationParams::uniform_x(4, 1.0, 0.8);
    attach_perturbation(e, pp, rng);
    std::vector<double> lw = log_weight_vector(e);
    for (std::uint32_t m = 0; m < (1u << n); m += 37) {
      SpinConfiguration sigma = spins_from_mask(m, n);
      CHECK(lw[m] == doctest::Approx(e.log_weight(sigma)).epsilon(1e-9));
    }
  }
}

TEST_CASE("enumeration capacity") {
  SKInstance inst;
  inst.n = 25;
  inst.g.assign(625, 0.0);
  GibbsEnsemble e = make_sk_ensemble(inst, 1.0);
  CHECK_THROWS_AS(enumerate_gibbs(e), capacity_error);
}

TEST_CASE("metropolis: beta 0 marginals, determinism, and exact-oracle chi2") {
  Rng rng(10);
  GibbsEnsemble free = make_ksat_ensemble(KSatInstance::sample(6, 2, 1.0, rng), 0.0);
  McmcOptions opt;
  opt.burnin_sweeps = 20;
  McmcDiagnostics diag;
  Rng chains(11);
  auto replicas = metropolis_replicas(free, 4000, 1, chains, opt, &diag);
  Accumulator spin_mean;
  for (const auto& r : replicas) {
    for (auto s : r.s) spin_mean.add(static_cast<double>(s));
  }
  CHECK(std::fabs(spin_mean.mean()) < 4.0 * spin_mean.se());
  CHECK(diag.acceptance_rate == doctest::Approx(1.0).epsilon(1e-12));  // beta 0 accepts all

  Rng c1(12), c2(12);
  auto r1 = metropolis_replicas(free, 5, 3, c1, opt);
  auto r2 = metropolis_replicas(free, 5, 3, c2, opt);
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].s == r2[i].s);

  // chi-squared against exact enumeration, merged cells.
  Rng drng(13);
  GibbsEnsemble e = make_ksat_ensemble(KSatInstance::sample(8, 2, 1.0, drng), 1.0);
  GibbsTable exact = enumerate_gibbs(e);
  McmcOptions mopt;
  mopt.burnin_sweeps = 150;
  Rng mc(14);
  auto draws = metropolis_replicas(e, 20000, 1, mc, mopt);
  std::vector<int> counts(exact.prob.size(), 0);
  for (const auto& r : draws) ++counts[spin_mask(r)];
  std::vector<std::size_t> order(exact.prob.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return exact.prob[a] < exact.prob[b]; });
  double stat = 0.0;
  double exp_acc = 0.0, obs_acc = 0.0;
  int cells = 0;
  for (std::size_t idx : order) {
    exp_acc += exact.prob[idx] * draws.size();
    obs_acc += counts[idx];
    if (exp_acc >= 5.0) {
      stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
      ++cells;
      exp_acc = obs_acc = 0.0;
    }
  }
  double p = chi2_sf(stat, cells - 1);
  CHECK(p > 1e-3);
}

TEST_CASE("overlap matrices") {
  SpinConfiguration a = all_plus(6);
  SpinConfiguration b = a;
  for (auto& s : b.s) s = -s;
  OverlapMatrix same = overlap_matrix({a, a});
  CHECK(same.at(0, 1) == 1.0);
  OverlapMatrix opp = overlap_matrix({a, b});
  CHECK(opp.at(0, 1) == -1.0);
  CHECK(opp.at(0, 0) == 1.0);

  Rng rng(15);
  std::vector<SpinConfiguration> reps;
  for (int i = 0; i < 6; ++i) {
    SpinConfiguration s;
    for (int j = 0; j < 32; ++j) s.s.push_back((rng.next_u64() & 1) ? 1 : -1);
    reps.push_back(s);
  }
  OverlapMatrix m = overlap_matrix(reps);
  for (int i = 0; i < m.n; ++i) {
    CHECK(m.at(i, i) == 1.0);
    for (int j = 0; j < m.n; ++j) {
      CHECK(m.at(i, j) == m.at(j, i));
      CHECK(m.at(i, j) >= -1.0);
      CHECK(m.at(i, j) <= 1.0);
    }
  }
  // Gram structure makes it positive semidefinite.
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> v(static_cast<std::size_t>(m.n));
    for (double& x : v) x = rng.next_normal();
    double quad = 0.0;
    for (int i = 0; i < m.n; ++i) {
      for (int j = 0; j < m.n; ++j) quad += v[i] * m.at(i, j) * v[j];
    }
    CHECK(quad >= -1e-9);
  }
}

TEST_CASE("free energy sandwich on exact instances") {
  // Per instance, averaging log Z over the perturbation Gaussians lands the
  // perturbed free energy inside [F, F + 3 s^2 / (2N)].
  Rng rng(16);
  const int n = 10;
  const double s = perturbation_strength_schedule(n, 0.4);
  PerturbationParams pp = PerturbationParams::uniform_x(8, 1.5, s);
  for (int inst = 0; inst < 4; ++inst) {
    GibbsEnsemble base = make_ksat_ensemble(KSatInstance::sample(n, 2, 1.0, rng), 1.0);
    std::vector<double> lw = log_weight_vector(base);
    double log_z0 = log_sum_exp(lw);
    Accumulator gap;
    std::vector<double> shifted(lw.size());
    for (int g = 0; g < 256; ++g) {
      PerturbationField field = PerturbationField::build(n, pp, rng);
      for (std::size_t m = 0; m < lw.size(); ++m) {
        shifted[m] = lw[m] + s * field.value_mask(static_cast<std::uint32_t>(m));
      }
      gap.add(log_sum_exp(shifted) - log_z0);
    }
    CHECK(gap.mean() > 0.0);
    CHECK(gap.mean() < 1.5 * s * s);
  }
}

TEST_CASE("concentration probe output shape and rates") {
  Rng rng(17);
  std::vector<int> n_list{6, 8, 10};
  ConcentrationTable t = concentration_probe(ModelFamily::ksat, n_list, 1.0, 2, 1.0, 0.4, 64, rng);
  REQUIRE(t.rows.size() == 3);
  for (const auto& row : t.rows) {
    CHECK(row.mad.value > 0.0);
    CHECK(row.bound_ratio < 1.0);  // the proof constant is far from tight
  }
  CHECK(std::isfinite(t.growth.slope));

  // CLT rate: doubling trials shrinks the standard error by about sqrt(2).
  Rng r1(18), r2(19);
  ConcentrationTable a = concentration_probe(ModelFamily::ksat, {8}, 1.0, 2, 1.0, 0.4, 128, r1);
  ConcentrationTable b = concentration_probe(ModelFamily::ksat, {8}, 1.0, 2, 1.0, 0.4, 256, r2);
  double ratio = a.rows[0].mad.se / b.rows[0].mad.se;
  CHECK(ratio > 1.0);
  CHECK(ratio < 2.1);
}

TEST_CASE("instance and replica files") {
  Rng rng(20);
  KSatInstance ks = KSatInstance::sample(5, 2, 1.0, rng);
  std::ostringstream os;
  write_instance(os, ks, 1.0, 42);
  std::istringstream is(os.str());
  std::string header, columns, line;
  std::getline(is, header);
  std::getline(is, columns);
  CHECK(header.find("\"model\":\"ksat\"") != std::string::npos);
  CHECK(header.find("\"seed\":42") != std::string::npos);
  CHECK(columns == "clause,position,sign,site");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == ks.clause_count * ks.k);

  std::ostringstream ro;
  write_replicas(ro, {all_plus(3), all_plus(3)});
  CHECK(ro.str() == "1,1,1\n1,1,1\n");
}
