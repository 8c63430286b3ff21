#include <doctest.h>

#include <cmath>
#include <vector>

#include "glasslab/rng.hpp"
#include "glasslab/stats.hpp"

using namespace glasslab;

TEST_CASE("keyed streams are reproducible and distinct") {
  Rng a = Rng::keyed(7, {1, 2});
  Rng b = Rng::keyed(7, {1, 2});
  Rng c = Rng::keyed(7, {1, 3});
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    std::uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
    if (va != c.next_u64()) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("substream does not disturb the parent") {
  Rng a(123);
  Rng b(123);
  (void)a.substream(5);
  for (int i = 0; i < 8; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform and normal moments") {
  Rng rng(99);
  Accumulator u, n;
  for (int i = 0; i < 200000; ++i) {
    u.add(rng.next_unit());
    n.add(rng.next_normal());
  }
  CHECK(std::fabs(u.mean() - 0.5) < 5.0 * u.se());
  CHECK(u.variance() == doctest::Approx(1.0 / 12.0).epsilon(0.02));
  CHECK(std::fabs(n.mean()) < 5.0 * n.se());
  CHECK(n.variance() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson sampler matches mean and variance across regimes") {
  Rng rng(17);
  for (double mean : {0.5, 7.0, 80.0}) {
    Accumulator acc;
    for (int i = 0; i < 60000; ++i) acc.add(static_cast<double>(rng.next_poisson(mean)));
    CHECK(std::fabs(acc.mean() - mean) < 5.0 * acc.se());
    CHECK(acc.variance() == doctest::Approx(mean).epsilon(0.06));
  }
}

TEST_CASE("accumulator merge equals sequential") {
  Rng rng(3);
  Accumulator all, left, right;
  for (int i = 0; i < 1000; ++i) {
    double x = rng.next_normal() * 3.0 + 1.0;
    all.add(x);
    (i < 400 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.count() == all.count());
  CHECK(left.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
  CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
}

TEST_CASE("vector accumulator covariance") {
  Rng rng(5);
  VectorAccumulator acc(2);
  std::vector<double> xs, ys;
  for (int i = 0; i < 5000; ++i) {
    double x = rng.next_normal();
    double y = 0.5 * x + rng.next_normal();
    acc.add(std::vector<double>{x, y});
    xs.push_back(x);
    ys.push_back(y);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double cov = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) cov += (xs[i] - mx) * (ys[i] - my);
  cov /= (xs.size() - 1);
  CHECK(acc.covariance(0, 1) == doctest::Approx(cov).epsilon(1e-10));
  std::vector<double> w{1.0, -1.0};
  double var = acc.covariance(0, 0) + acc.covariance(1, 1) - 2 * acc.covariance(0, 1);
  CHECK(acc.linear_se(w) == doctest::Approx(std::sqrt(var / xs.size())).epsilon(1e-10));
}

TEST_CASE("vector accumulator merge equals sequential") {
  Rng rng(7);
  VectorAccumulator all(3), left(3), right(3);
  for (int i = 0; i < 900; ++i) {
    std::vector<double> v{rng.next_normal(), rng.next_unit(), rng.next_exponential()};
    all.add(v);
    (i < 333 ? left : right).add(v);
  }
  left.merge(right);
  for (int i = 0; i < 3; ++i) {
    CHECK(left.mean(i) == doctest::Approx(all.mean(i)).epsilon(1e-12));
    for (int j = i; j < 3; ++j) {
      CHECK(left.covariance(i, j) == doctest::Approx(all.covariance(i, j)).epsilon(1e-10));
    }
  }
}

TEST_CASE("kolmogorov critical values") {
  CHECK(kolmogorov_sf(1.358) == doctest::Approx(0.05).epsilon(0.02));
  CHECK(kolmogorov_sf(1.628) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("ks two-sample separates shifted samples") {
  Rng rng(11);
  std::vector<double> a, b, c;
  for (int i = 0; i < 4000; ++i) {
    a.push_back(rng.next_normal());
    b.push_back(rng.next_normal());
    c.push_back(rng.next_normal() + 0.5);
  }
  double p_same = ks_two_sample_pvalue(ks_statistic_two_sample(a, b), a.size(), b.size());
  double p_diff = ks_two_sample_pvalue(ks_statistic_two_sample(a, c), a.size(), c.size());
  CHECK(p_same > 1e-4);
  CHECK(p_diff < 1e-8);
}

TEST_CASE("uniform ks p-values are calibrated") {
  Rng rng(13);
  std::vector<double> ps;
  for (int rep = 0; rep < 400; ++rep) {
    std::vector<double> sample(200);
    for (double& v : sample) v = rng.next_unit();
    ps.push_back(ks_uniform_pvalue(ks_statistic_uniform(sample), sample.size()));
  }
  CHECK(ks_uniform_pvalue(ks_statistic_uniform(ps), ps.size()) > 1e-3);
}

TEST_CASE("chi2 survival function") {
  CHECK(chi2_sf(3.841, 1) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(chi2_sf(18.307, 10) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(chi2_sf(23.209, 10) == doctest::Approx(0.01).epsilon(0.02));
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(normal_quantile(0.995) == doctest::Approx(2.575829).epsilon(1e-5));
  CHECK(normal_cdf(normal_quantile(0.31)) == doctest::Approx(0.31).epsilon(1e-8));
}

TEST_CASE("linear fit recovers slope") {
  Rng rng(19);
  std::vector<double> x, y;
  for (int i = 0; i < 200; ++i) {
    double xi = i * 0.05;
    x.push_back(xi);
    y.push_back(2.0 + 0.5 * xi + 0.05 * rng.next_normal());
  }
  LinearFit fit = linear_fit(x, y);
  CHECK(std::fabs(fit.slope - 0.5) < 4.0 * fit.slope_se);
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("distance correlation detects dependence") {
  Rng rng(23);
  std::vector<std::vector<double>> x, y_ind, y_dep;
  for (int i = 0; i < 300; ++i) {
    double xi = rng.next_normal();
    x.push_back({xi});
    y_ind.push_back({rng.next_normal()});
    y_dep.push_back({xi * xi + 0.1 * rng.next_normal()});
  }
  DistanceCorrelation ind(x, y_ind);
  DistanceCorrelation dep(x, y_dep);
  CHECK(ind.observed() < 0.15);
  CHECK(dep.observed() > 0.4);

  std::vector<std::uint32_t> perm(x.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<std::uint32_t>(i);
  CHECK(dep.permuted(perm) == doctest::Approx(dep.observed()).epsilon(1e-12));
}

TEST_CASE("smoothed permutation p-value is uniform under exchangeability") {
  Rng rng(29);
  std::vector<double> ps;
  for (int rep = 0; rep < 500; ++rep) {
    double obs = rng.next_normal();
    std::vector<double> perm(99);
    for (double& v : perm) v = rng.next_normal();
    ps.push_back(smoothed_permutation_pvalue(obs, perm, rng));
  }
  CHECK(ks_uniform_pvalue(ks_statistic_uniform(ps), ps.size()) > 1e-3);
}
