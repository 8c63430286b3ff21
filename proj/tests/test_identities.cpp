#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "glasslab/identities.hpp"
#include "glasslab/sources.hpp"

using namespace glasslab;

namespace {

CascadeParams small_cascade(int r, std::vector<double> zetas, int d) {
  CascadeParams p;
  p.r = r;
  p.zetas = std::move(zetas);
  p.d = d;
  return p;
}

}  // namespace

TEST_CASE("simplex validation") {
  SimplexPoint ok{{0.2, 0.3}};
  CHECK_NOTHROW(ok.validate());
  CHECK_THROWS_AS((SimplexPoint{{0.5, 0.5}}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((SimplexPoint{{-0.1, 0.3}}).validate(), std::invalid_argument);
}

TEST_CASE("tilt map worked example") {
  SimplexPoint x{{0.2, 0.3}};
  TiltVector zero{{0.0, 0.0}};
  SimplexPoint same = tilt_map(zero, x);
  CHECK(same.x[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(same.x[1] == doctest::Approx(0.3).epsilon(1e-15));

  TiltVector a{{std::log(2.0), 0.0}};
  SimplexPoint y = tilt_map(a, x);
  CHECK(tilt_normalizer(a, x) == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(y.x[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(y.x[1] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("tilt group law and normalizer identity over random pairs") {
  Rng rng(1);
  double worst_group = 0.0, worst_identity = 0.0, worst_round = 0.0;
  for (int rep = 0; rep < 2000; ++rep) {
    const int dim = 1 + static_cast<int>(rng.next_below(6));
    SimplexPoint x;
    double total = 0.0;
    std::vector<double> e(static_cast<std::size_t>(dim) + 1);
    for (double& v : e) {
      v = rng.next_exponential();
      total += v;
    }
    for (int t = 0; t < dim; ++t) x.x.push_back(e[static_cast<std::size_t>(t)] / total);
    TiltVector a, b, ab, neg;
    for (int t = 0; t < dim; ++t) {
      a.a.push_back(4.0 * rng.next_unit() - 2.0);
      b.a.push_back(4.0 * rng.next_unit() - 2.0);
      ab.a.push_back(a.a.back() + b.a.back());
      neg.a.push_back(-a.a.back());
    }
    worst_identity = std::max(worst_identity, tilt_identity_residual(a, x));
    SimplexPoint lhs = tilt_map(a, tilt_map(b, x));
    SimplexPoint rhs = tilt_map(ab, x);
    SimplexPoint round = tilt_map(neg, tilt_map(a, x));
    for (int t = 0; t < dim; ++t) {
      worst_group = std::max(worst_group, std::fabs(lhs.x[static_cast<std::size_t>(t)] -
                                                    rhs.x[static_cast<std::size_t>(t)]));
      worst_round = std::max(worst_round, std::fabs(round.x[static_cast<std::size_t>(t)] -
                                                    x.x[static_cast<std::size_t>(t)]));
    }
  }
  CHECK(worst_identity <= 1e-12);
  CHECK(worst_group <= 1e-12);
  CHECK(worst_round <= 1e-12);
}

TEST_CASE("tilt stress tier at magnitude 30") {
  Rng rng(2);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    SimplexPoint x;
    double total = 0.0;
    std::vector<double> e(4);
    for (double& v : e) {
      v = rng.next_exponential();
      total += v;
    }
    for (int t = 0; t < 3; ++t) x.x.push_back(e[static_cast<std::size_t>(t)] / total);
    TiltVector a;
    a.a = {30.0, 60.0 * rng.next_unit() - 30.0, -30.0};
    worst = std::max(worst, tilt_identity_residual(a, x));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("test functions stay bounded and evaluate on groups") {
  CascadeMeasureModel model(small_cascade(1, {0.5}, 8), HierarchicalKernel::balanced(1, 1.0));
  Rng rng(3);
  model.sample_measure(rng);
  ReplicaGroup g;
  model.draw_group(3, 4, rng, g);
  CHECK(TestFunctionSpec::one().eval(g) == 1.0);
  double v = TestFunctionSpec::spins({{0, 0}, {1, 1}}).eval(g);
  CHECK((v == 1.0 || v == -1.0));
  CHECK_THROWS_AS(TestFunctionSpec::spins({{5, 0}}).eval(g), std::invalid_argument);
}

TEST_CASE("defect is exactly zero on a point-mass measure") {
  // d = 1 keeps a single leaf, so every overlap equals the top grid value and
  // the mixture identity telescopes draw by draw.
  CascadeMeasureModel model(small_cascade(2, {0.3, 0.6}, 1), HierarchicalKernel::balanced(2, 0.7));
  GgiOptions opt;
  opt.samples = 2000;
  opt.groups_per_measure = 4;
  GgiResult res = ggi_delta(model, TestFunctionSpec::spins({{0, 0}}), 2, 1, opt, Rng(4));
  CHECK(res.delta.value <= 1e-14);
}

TEST_CASE("defect vanishes identically for constant test functions") {
  TwoAtomControlModel model(0.7, 0.0, 0.8, 1);
  GgiOptions opt;
  opt.samples = 200000;
  opt.groups_per_measure = 16;
  for (int n : {2, 3}) {
    GgiResult res = ggi_delta(model, TestFunctionSpec::one(), n, 1, opt, Rng(5));
    CHECK(res.delta.value <= 4.0 * res.delta.se + 1e-12);
  }
}

TEST_CASE("defect consistent with zero on cascade sources") {
  CascadeMeasureModel model(small_cascade(2, {0.3, 0.6}, 40),
                            HierarchicalKernel::balanced(2, 1.0));
  GgiOptions opt;
  opt.samples = 120000;
  opt.groups_per_measure = 8;
  for (int p : {1, 2}) {
    GgiResult res = ggi_delta(model, TestFunctionSpec::spins({{0, 0}, {1, 0}}), 3, p, opt, Rng(6));
    CHECK(res.delta.value <= 3.0 * res.delta.se + 2.0 * res.mean_residual);
  }
}

TEST_CASE("fixed two-atom measure violates the identity by the known amount") {
  // Closed form for f = s_0^1 s_0^2, n = 2, p = 1 with atom masses (w, 1-w),
  // magnetizations +-m, cross overlap 0:
  //   |m^2 (2w-1)^2 (1 - c/2) - m^2 c / 2|  with  c = w^2 + (1-w)^2.
  const double w = 0.7, m0 = 0.8;
  const double c = w * w + (1.0 - w) * (1.0 - w);
  const double expected =
      std::fabs(m0 * m0 * (2 * w - 1) * (2 * w - 1) * (1.0 - c / 2.0) - m0 * m0 * c / 2.0);
  TwoAtomControlModel model(w, 0.0, m0, 1);
  GgiOptions opt;
  opt.samples = 300000;
  opt.groups_per_measure = 16;
  GgiResult res = ggi_delta(model, TestFunctionSpec::spins({{0, 0}, {1, 0}}), 2, 1, opt, Rng(7));
  CHECK(std::fabs(res.delta.value - expected) <= 5.0 * res.delta.se);
  CHECK(res.delta.value / res.delta.se > 5.0);
}

TEST_CASE("conditional mixture weight matches the plug-in value") {
  // One-level cascade with zeta0 = 0.5: P(new overlap at the top | existing
  // pair at the top) = (1/2) (1 - zeta0) + 1/2 = 0.75.
  CascadeMeasureModel model(small_cascade(1, {0.5}, 64), HierarchicalKernel::balanced(1, 1.0));
  Rng rng(8);
  Accumulator cond;
  Accumulator residual;
  auto local = model.clone();
  ReplicaGroup g;
  for (int i = 0; i < 60000; ++i) {
    Rng draw = rng.substream(static_cast<std::uint64_t>(i));
    local->sample_measure(draw);
    residual.add(local->residual());
    local->draw_group(3, 1, draw, g);
    if (g.overlaps.at(0, 1) >= 0.999) {
      cond.add(g.overlaps.at(0, 2) >= 0.999 ? 1.0 : 0.0);
    }
  }
  CHECK(std::fabs(cond.mean() - 0.75) < 4.0 * cond.se() + 2.0 * residual.mean());
}

TEST_CASE("mixture law distance is small on cascades and shrinks with samples") {
  CascadeMeasureModel model(small_cascade(1, {0.5}, 48), HierarchicalKernel::balanced(1, 1.0));
  GgiOptions small_opt;
  small_opt.samples = 4000;
  small_opt.groups_per_measure = 4;
  GgiOptions big_opt = small_opt;
  big_opt.samples = 64000;
  MixtureLawResult small_run = mixture_law_check(model, 2, small_opt, Rng(9));
  MixtureLawResult big_run = mixture_law_check(model, 2, big_opt, Rng(10));
  CHECK(big_run.tv_distance < 0.02 + 2.0 * big_run.mean_residual);
  CHECK(big_run.tv_distance < small_run.tv_distance + 0.01);
  CHECK(big_run.cells >= 2);
}

TEST_CASE("mixture law flags the fixed measure") {
  TwoAtomControlModel model(0.7, 0.0, 0.8, 1);
  GgiOptions opt;
  opt.samples = 64000;
  opt.groups_per_measure = 8;
  MixtureLawResult res = mixture_law_check(model, 2, opt, Rng(11));
  CHECK(res.tv_distance > 0.05);
}

namespace {

Configuration one_level_config(const std::vector<int>& counts) {
  Configuration cfg;
  cfg.depth = 1;
  cfg.nodes.push_back({VertexLabel::root(), {}, {}, -1});
  int replica = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    int id = static_cast<int>(cfg.nodes.size());
    cfg.nodes.push_back({VertexLabel::root().child(static_cast<int>(k) + 1), {}, {}, 0});
    cfg.nodes[0].children.push_back(id);
    for (int c = 0; c < counts[k]; ++c) {
      cfg.nodes[static_cast<std::size_t>(id)].replicas.push_back(replica++);
    }
  }
  cfg.n_replicas = replica;
  return cfg;
}

}  // namespace

TEST_CASE("reweighting identity holds trivially at b = 0") {
  CascadeMeasureModel model(small_cascade(1, {0.5}, 24), HierarchicalKernel::balanced(1, 1.0));
  Configuration cfg = one_level_config({2, 1});
  std::vector<double> b(3, 0.0);
  std::vector<PhiSpec> phis(2);
  phis[0].label = "unit";
  phis[1].label = "box";
  phis[1].boxes = {{1, 0.2, 0.9}};
  ReweightingOptions opt;
  opt.samples = 4000;
  opt.groups_per_measure = 4;
  ReweightingResult res = reweighting_check(model, cfg, b, phis, opt, Rng(12));
  for (const auto& pr : res.phis) {
    CHECK(std::fabs(pr.diff) <= 1e-8);
    CHECK(pr.se <= 1e-8);
  }
  CHECK(res.event_rate > 0.0);
}

TEST_CASE("reweighting identity holds on the cascade within tolerance") {
  CascadeMeasureModel model(small_cascade(1, {0.5}, 50), HierarchicalKernel::balanced(1, 1.0));
  Configuration cfg = one_level_config({2, 1});
  std::vector<double> b = {0.0, 0.8, -0.6};
  std::vector<PhiSpec> phis(3);
  phis[0].label = "unit";
  phis[1].label = "box_leaf1";
  phis[1].boxes = {{1, 0.3, 0.95}};
  phis[2].label = "box_spin";
  phis[2].boxes = {{2, 0.01, 0.6}};
  phis[2].spin_factors = {{2, 0}};
  ReweightingOptions opt;
  opt.samples = 150000;
  opt.groups_per_measure = 4;
  opt.m_window = 4;
  ReweightingResult res = reweighting_check(model, cfg, b, phis, opt, Rng(13));
  for (const auto& pr : res.phis) {
    CHECK(std::fabs(pr.diff) <= 3.0 * pr.se + 2.0 * res.mean_residual);
  }
}

TEST_CASE("reweighting identity fails for the fixed two-atom measure") {
  TwoAtomControlModel model(0.7, 0.0, 0.8, 1);
  Configuration cfg = one_level_config({2, 1});
  std::vector<double> b = {0.0, 1.0, -1.0};
  std::vector<PhiSpec> phis(1);
  // Box centered on the deterministic remainder weights of the fixed measure:
  // under the event, delta_leaf1 = 0.7 exactly, so the tilted point leaves it.
  phis[0].label = "box";
  phis[0].boxes = {{1, 0.65, 0.75}};
  ReweightingOptions opt;
  opt.samples = 60000;
  opt.groups_per_measure = 8;
  ReweightingResult res = reweighting_check(model, cfg, b, phis, opt, Rng(14));
  CHECK(std::fabs(res.phis[0].diff) / res.phis[0].se > 5.0);
}

TEST_CASE("reweighting rejects an impossible clustering event") {
  // d = 1 keeps one leaf: three replicas can never split into two leaves.
  CascadeMeasureModel model(small_cascade(1, {0.5}, 1), HierarchicalKernel::balanced(1, 1.0));
  Configuration cfg = one_level_config({2, 1});
  std::vector<double> b(3, 0.0);
  std::vector<PhiSpec> phis(1);
  phis[0].label = "unit";
  ReweightingOptions opt;
  opt.samples = 500;
  ReweightingResult res;
  CHECK_THROWS_AS(res = reweighting_check(model, cfg, b, phis, opt, Rng(15)),
                  std::runtime_error);
}
