#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "glasslab/exchangeability.hpp"

using namespace glasslab;

namespace {

CascadeParams tiny_cascade(int r, std::vector<double> zetas, int d) {
  CascadeParams p;
  p.r = r;
  p.zetas = std::move(zetas);
  p.d = d;
  return p;
}

}  // namespace

TEST_CASE("constant kernels produce deterministic or fair spins") {
  SigmaKernel plus{SigmaKernel::Family::constant, 1.0, 0.0, 0.0};
  Rng rng(1);
  SpinArray all = generate_spins(plus, 4, 32, rng);
  for (auto s : all.s) CHECK(s == 1);

  SigmaKernel fair{SigmaKernel::Family::constant, 0.0, 0.0, 0.0};
  Accumulator acc;
  SpinArray coins = generate_spins(fair, 50, 200, rng);
  for (auto s : coins.s) acc.add(static_cast<double>(s));
  CHECK(std::fabs(acc.mean()) < 4.0 * acc.se());
}

TEST_CASE("empirical overlap converges to the kernel integral") {
  // For fixed w, u1, u2 the overlap tends to the v-integral of the kernel
  // product; Simpson quadrature supplies the reference.
  SigmaKernel kernel{SigmaKernel::Family::logistic, 1.3, 0.4, 0.0};
  const double w = 0.37, u1 = 0.81, u2 = 0.22;
  const int quad_points = 2001;
  double integral = 0.0;
  for (int i = 0; i < quad_points; ++i) {
    double v = static_cast<double>(i) / (quad_points - 1);
    double weight = (i == 0 || i == quad_points - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    integral += weight * kernel.eval(w, u1, v) * kernel.eval(w, u2, v);
  }
  integral /= 3.0 * (quad_points - 1);

  Rng rng(2);
  const int m = 60000;
  SpinArray arr = generate_spins_given(kernel, w, {u1, u2}, m, rng);
  double emp = 0.0;
  for (int i = 0; i < m; ++i) emp += arr.at(0, i) * arr.at(1, i);
  emp /= m;
  double se = std::sqrt((1.0 - integral * integral) / m);
  CHECK(std::fabs(emp - integral) < 4.0 * se);
}

TEST_CASE("hierarchical spins are a fixed function of the noise field") {
  HierarchicalKernel kernel = HierarchicalKernel::balanced(2, 1.0);
  NoiseField noise(12345);
  PureStateSpinArray a = generate_hierarchical_spins(kernel, noise, 2, 3, 8);
  PureStateSpinArray b = generate_hierarchical_spins(kernel, noise, 2, 3, 8);
  CHECK(a.s == b.s);
  CHECK(a.leaf_count() == 4);

  // A zero-gain kernel flips fair coins; means must hover near zero.
  HierarchicalKernel flat = HierarchicalKernel::balanced(2, 0.0);
  Accumulator acc;
  for (int seed = 0; seed < 200; ++seed) {
    NoiseField field(static_cast<std::uint64_t>(seed) * 7919 + 3);
    PureStateSpinArray arr = generate_hierarchical_spins(flat, field, 2, 2, 16);
    for (auto s : arr.s) acc.add(static_cast<double>(s));
  }
  CHECK(std::fabs(acc.mean()) < 4.0 * acc.se());
}

TEST_CASE("shared path noise couples states monotonically in the wedge") {
  HierarchicalKernel kernel = HierarchicalKernel::balanced(2, 1.2);
  Rng rng(3);
  VectorAccumulator prods(3);  // wedge 0, 1, 2 products of leaf means
  for (int rep = 0; rep < 4000; ++rep) {
    NoiseField noise(rng.next_u64());
    PureStateSpinArray arr = generate_hierarchical_spins(kernel, noise, 2, 1, 16);
    auto leaf_mean = [&](int leaf) {
      double acc = 0.0;
      for (int i = 0; i < arr.m; ++i) acc += arr.at(leaf, 0, i);
      return acc / arr.m;
    };
    // leaves in id order: (1,1), (1,2), (2,1), (2,2)
    double m11 = leaf_mean(0), m12 = leaf_mean(1), m21 = leaf_mean(2);
    prods.add(std::vector<double>{m11 * m21, m11 * m12, m11 * m11});
  }
  double c0 = prods.mean(0), c1 = prods.mean(1), c2 = prods.mean(2);
  double se = std::sqrt(std::max({prods.covariance(0, 0), prods.covariance(1, 1),
                                  prods.covariance(2, 2)}) /
                        static_cast<double>(prods.count()));
  CHECK(c1 > c0 + 3.0 * se);
  CHECK(c2 > c1 + 3.0 * se);
}

TEST_CASE("magnetization averages replicas coordinate-wise") {
  HierarchicalKernel kernel = HierarchicalKernel::balanced(1, 0.9);
  NoiseField noise(77);
  PureStateSpinArray arr = generate_hierarchical_spins(kernel, noise, 2, 64, 8);
  std::vector<double> m = magnetization(arr, 0);
  REQUIRE(m.size() == 8);
  for (int i = 0; i < 8; ++i) {
    double direct = 0.0;
    for (int rep = 0; rep < arr.n; ++rep) direct += arr.at(0, rep, i);
    CHECK(m[static_cast<std::size_t>(i)] == doctest::Approx(direct / arr.n));
    CHECK(std::fabs(m[static_cast<std::size_t>(i)]) <= 1.0);
  }

  // The replica average estimates the kernel magnetization at CLT rate.
  VertexLabel leaf = VertexLabel{1};
  Accumulator err;
  for (int seed = 0; seed < 300; ++seed) {
    NoiseField field(static_cast<std::uint64_t>(seed) + 1000);
    PureStateSpinArray big = generate_hierarchical_spins(kernel, field, 2, 256, 1);
    double target = kernel.magnetization(field, leaf, 0);
    err.add(magnetization(big, 0)[0] - target);
  }
  CHECK(std::fabs(err.mean()) < 4.0 * err.se());
  CHECK(err.sd() < 1.1 / std::sqrt(256.0));
}

TEST_CASE("multi overlap reduces to the pair overlap and respects zeros") {
  std::vector<double> ma{0.5, -0.5, 1.0};
  std::vector<double> mb{0.2, 0.4, -1.0};
  double direct = (0.5 * 0.2 + -0.5 * 0.4 + 1.0 * -1.0) / 3.0;
  CHECK(multi_overlap({ma, mb}) == doctest::Approx(direct).epsilon(1e-15));
  std::vector<double> zero(3, 0.0);
  CHECK(multi_overlap({ma, mb, zero}) == 0.0);
  CHECK_THROWS_AS(multi_overlap({ma, {0.1}}), std::invalid_argument);
}

TEST_CASE("multi overlap depends only on the wedge pattern for path kernels") {
  // Triples of leaves with isomorphic wedge patterns must give the same
  // expected multi-overlap when the kernel uses only per-coordinate noise.
  HierarchicalKernel kernel = HierarchicalKernel::balanced(2, 1.0);
  Rng rng(4);
  Accumulator t1, t2;
  for (int rep = 0; rep < 6000; ++rep) {
    NoiseField noise(rng.next_u64());
    PureStateSpinArray arr = generate_hierarchical_spins(kernel, noise, 2, 48, 8);
    // Pattern A: leaves (1,1), (1,2), (2,1); pattern B: (2,2), (2,1), (1,2)
    // are wedge-isomorphic triples.
    t1.add(multi_overlap({magnetization(arr, 0), magnetization(arr, 1), magnetization(arr, 2)}));
    t2.add(multi_overlap({magnetization(arr, 3), magnetization(arr, 2), magnetization(arr, 1)}));
  }
  double se = std::hypot(t1.se(), t2.se());
  CHECK(std::fabs(t1.mean() - t2.mean()) < 3.0 * se);
}

TEST_CASE("pure state sampling conditions the landing counts") {
  CascadeParams p = tiny_cascade(2, {0.3, 0.6}, 2);
  HierarchicalKernel kernel = HierarchicalKernel::balanced(2, 1.0);
  Rng rng(5);
  PureStateSample sample = sample_pure_states(p, kernel, 4, 8, 50000, 64, rng);
  CHECK(sample.spins.leaf_count() == 4);
  CHECK(sample.leaf_masses.size() == 4);
  CHECK(sample.top_weights[0] >= sample.top_weights[1]);
  CHECK(sample.top_weights[1] >= sample.top_weights[2]);
  CHECK(sample.draws_used >= 16);
  CHECK(sample.residual > 0.0);

  // A cap below the bare minimum can never satisfy the conditioning.
  CHECK_THROWS_AS(sample_pure_states(p, kernel, 4, 8, 3, 2, rng), std::runtime_error);
}

TEST_CASE("conditioning on extra replicas does not change the reduced spin law") {
  // The law of the designated replicas' spins is the same whether the
  // clustering event involves exactly one replica per leaf or one extra.
  CascadeParams p = tiny_cascade(1, {0.5}, 2);
  HierarchicalKernel kernel = HierarchicalKernel::balanced(1, 1.1);
  CascadeMeasureModel model(p, kernel);
  Rng rng(6);
  auto local = model.clone();
  ReplicaGroup g;
  std::vector<double> small_sum, big_sum;
  const int m = 6;
  while (small_sum.size() < 4000 || big_sum.size() < 4000) {
    Rng draw = rng.substream(static_cast<std::uint64_t>(small_sum.size() + big_sum.size()) +
                             (rng.next_u64() & 0xffff));
    local->sample_measure(draw);
    if (small_sum.size() < 4000) {
      local->draw_group(2, m, draw, g);
      if (g.atoms[0] != g.atoms[1]) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += g.spin(0, i);
        small_sum.push_back(acc / m);
      }
    }
    if (big_sum.size() < 4000) {
      local->draw_group(3, m, draw, g);
      // Event: replicas 0 and 2 share a leaf, replica 1 sits elsewhere.
      if (g.atoms[0] == g.atoms[2] && g.atoms[0] != g.atoms[1]) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += g.spin(0, i);
        big_sum.push_back(acc / m);
      }
    }
  }
  double stat = ks_statistic_two_sample(small_sum, big_sum);
  CHECK(ks_two_sample_pvalue(stat, small_sum.size(), big_sum.size()) > 1e-3);
}

TEST_CASE("exchangeability test is trivial at d = 1") {
  HierarchicalArraySource source(1, HierarchicalKernel::balanced(2, 1.0), 2, 4);
  ExchangeabilityOptions opt;
  opt.trials = 10;
  opt.permutations = 19;
  ExchangeabilityReport rep = hierarchical_exchangeability_test(source, opt, Rng(7));
  for (const auto& row : rep.p_values) {
    for (double p : row) CHECK(p == 1.0);
  }
  CHECK(!rep.law_reject(0.01));
}

TEST_CASE("exchangeability p-values are uniform under the null") {
  HierarchicalArraySource source(2, HierarchicalKernel::balanced(2, 1.0), 3, 6);
  ExchangeabilityOptions opt;
  opt.trials = 300;
  opt.permutations = 99;
  ExchangeabilityReport rep = hierarchical_exchangeability_test(source, opt, Rng(8));
  for (std::size_t s = 0; s < rep.stat_names.size(); ++s) {
    CHECK(rep.uniformity_pvalue(static_cast<int>(s)) > 1e-3);
  }
  CHECK(rep.rejection_rate(0.05) < 0.15);
}

TEST_CASE("coordinate plant is rejected with high power") {
  CoordinatePlantSource source(3, 2, 0.05);
  ExchangeabilityOptions opt;
  opt.trials = 200;
  opt.permutations = 99;
  ExchangeabilityReport rep = hierarchical_exchangeability_test(source, opt, Rng(9));
  CHECK(rep.law_reject(0.01));

  // The null generator must not trip the same verdict.
  HierarchicalArraySource null_source(3, HierarchicalKernel::balanced(2, 1.0), 3, 6);
  ExchangeabilityReport ok = hierarchical_exchangeability_test(null_source, opt, Rng(10));
  CHECK(!ok.law_reject(0.01));
}

TEST_CASE("a vertex-noise kernel still yields an exchangeable array") {
  HierarchicalKernel kernel = HierarchicalKernel::balanced(2, 1.0);
  kernel.vertex_coef = 0.6;
  HierarchicalArraySource source(2, kernel, 3, 6);
  ExchangeabilityOptions opt;
  opt.trials = 200;
  opt.permutations = 99;
  ExchangeabilityReport rep = hierarchical_exchangeability_test(source, opt, Rng(10));
  for (std::size_t s = 0; s < rep.stat_names.size(); ++s) {
    CHECK(rep.uniformity_pvalue(static_cast<int>(s)) > 1e-3);
  }
}

namespace {

class GaussianPairSource : public PairedVectorSource {
 public:
  explicit GaussianPairSource(double coupling) : coupling_(coupling) {}
  void draw(Rng& rng, std::vector<double>& x, std::vector<double>& y) override {
    double shared = rng.next_normal();
    x = {shared, rng.next_normal()};
    y = {coupling_ * shared + rng.next_normal(), rng.next_normal()};
  }

 private:
  double coupling_;
};

class ConstantPairSource : public PairedVectorSource {
 public:
  void draw(Rng&, std::vector<double>& x, std::vector<double>& y) override {
    x = {1.0};
    y = {2.0};
  }
};

}  // namespace

TEST_CASE("independence test calibration and power") {
  IndependenceOptions opt;
  opt.trials = 150;
  opt.permutations = 79;
  GaussianPairSource null_source(0.0);
  std::vector<double> ps;
  for (int rep = 0; rep < 120; ++rep) {
    IndependenceResult res = independence_test(null_source, opt, Rng(1000 + rep));
    ps.push_back(res.p_value);
  }
  CHECK(ks_uniform_pvalue(ks_statistic_uniform(ps), ps.size()) > 1e-3);

  GaussianPairSource dep_source(1.5);
  int rejections = 0;
  for (int rep = 0; rep < 20; ++rep) {
    IndependenceResult res = independence_test(dep_source, opt, Rng(2000 + rep));
    if (res.p_value <= 0.05) ++rejections;
  }
  CHECK(rejections >= 19);

  ConstantPairSource constant;
  CHECK_THROWS_AS(independence_test(constant, opt, Rng(1)), degenerate_statistic_error);
}

TEST_CASE("sequential early stopping never flips a rejection decision") {
  GaussianPairSource null_source(0.0);
  IndependenceOptions full;
  full.trials = 100;
  full.permutations = 99;
  IndependenceOptions seq = full;
  seq.sequential = true;
  for (int rep = 0; rep < 40; ++rep) {
    IndependenceResult a = independence_test(null_source, full, Rng(3000 + rep));
    IndependenceResult b = independence_test(null_source, seq, Rng(3000 + rep));
    CHECK(a.reject(0.01) == b.reject(0.01));
    if (!b.completed) CHECK(b.permutations_used <= full.permutations);
  }
}

TEST_CASE("cascade pipeline source emits bounded summaries") {
  CascadeParams p = tiny_cascade(2, {0.3, 0.6}, 2);
  CascadePipelineSource source(p, HierarchicalKernel::balanced(2, 1.0), 4, 16,
                               SpinSummary::leaf_means, 3, 20000, 32);
  Rng rng(11);
  std::vector<double> x, y;
  for (int i = 0; i < 10; ++i) {
    source.draw(rng, x, y);
    CHECK(x.size() == 4);
    CHECK(y.size() == 3);
    for (double v : x) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
    CHECK(y[0] >= y[1]);
    CHECK(y[1] >= y[2]);
  }
}

TEST_CASE("planted dependence is caught by the test") {
  CascadeParams p = tiny_cascade(2, {0.3, 0.6}, 2);
  PlantedDependenceSource source(p, 0.05, 3);
  IndependenceOptions opt;
  opt.trials = 200;
  opt.permutations = 199;
  IndependenceResult res = independence_test(source, opt, Rng(12));
  CHECK(res.reject(0.01));
}
