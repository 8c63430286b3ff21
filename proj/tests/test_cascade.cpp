#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "glasslab/cascade.hpp"
#include "glasslab/point_process.hpp"
#include "glasslab/stats.hpp"

using namespace glasslab;

namespace {

CascadeParams make_params(int r, std::vector<double> zetas, int d) {
  CascadeParams p;
  p.r = r;
  p.zetas = std::move(zetas);
  p.d = d;
  return p;
}

}  // namespace

TEST_CASE("parameter validation") {
  Rng rng(1);
  CHECK_THROWS_AS(build_cascade(make_params(2, {0.5}, 8), rng), std::invalid_argument);
  CHECK_THROWS_AS(build_cascade(make_params(2, {0.6, 0.3}, 8), rng), std::invalid_argument);
  CHECK_THROWS_AS(build_cascade(make_params(1, {1.0}, 8), rng), std::invalid_argument);
  CHECK_THROWS_AS(build_cascade(make_params(1, {0.5}, 0), rng), std::invalid_argument);
  CHECK_NOTHROW(build_cascade(make_params(2, {0.3, 0.6}, 4), rng));
}

TEST_CASE("structural invariants of a built cascade") {
  Rng rng(2);
  CascadeParams p = make_params(3, {0.25, 0.5, 0.75}, 6);
  CascadeWeights cw = build_cascade(p, rng);
  const TreeShape& shape = cw.shape();

  // Children decreasing in V at every internal vertex, and V additive.
  for (std::int64_t v = 0; v < shape.internal_count(); ++v) {
    VertexLabel label = shape.label_of(v);
    double child_sum = 0.0;
    double prev = 2.0;
    for (int n = 1; n <= p.d; ++n) {
      double child = cw.V(label.child(n));
      CHECK(child < prev);
      prev = child;
      child_sum += child;
    }
    CHECK(cw.V(label) == doctest::Approx(child_sum).epsilon(1e-10));
  }

  // Leaf masses sum to 1 - residual; w is the path product of u.
  double leaf_sum = 0.0;
  for (std::int64_t id = shape.first_leaf(); id < shape.vertex_count(); ++id) {
    leaf_sum += cw.V(shape.label_of(id));
  }
  CHECK(leaf_sum + cw.residual_mass() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(cw.residual_mass() > 0.0);
  CHECK(cw.residual_mass() < 1.0);

  Rng pick(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::int64_t id = static_cast<std::int64_t>(pick.next_below(
                          static_cast<std::uint64_t>(shape.vertex_count() - 1))) + 1;
    VertexLabel label = shape.label_of(id);
    double prod = 1.0;
    for (const VertexLabel& b : path_to_root(label)) prod *= cw.u(b);
    CHECK(cw.w(label) == doctest::Approx(prod).epsilon(1e-12));
  }

  // V is v composed with the relabelling bijection.
  for (std::int64_t id = 0; id < shape.vertex_count(); ++id) {
    VertexLabel label = shape.label_of(id);
    CHECK(cw.V(label) == doctest::Approx(cw.v(cw.pi(label))).epsilon(1e-15));
  }
}

TEST_CASE("depth-1 leaf weights match the Poisson-Dirichlet sampler") {
  // r=1 cascade leaves and sample_pd are the same construction; their top
  // marginals must agree in distribution (the weights here are normalized
  // over the kept points on both sides).
  Rng rng(4);
  const double zeta = 0.45;
  const int d = 64;
  const int builds = 3000;
  std::vector<std::vector<double>> casc(3), ref(3);
  for (int b = 0; b < builds; ++b) {
    CascadeWeights cw = build_cascade(make_params(1, {zeta}, d), rng);
    std::vector<double> masses = cw.level_masses(1);
    double kept = 1.0 - cw.residual_mass();
    PDWeights w = sample_pd(zeta, d, rng);
    for (int k = 0; k < 3; ++k) {
      casc[static_cast<std::size_t>(k)].push_back(masses[static_cast<std::size_t>(k)] / kept);
      ref[static_cast<std::size_t>(k)].push_back(
          w.weights[static_cast<std::size_t>(k)] / (1.0 - w.truncation_mass));
    }
  }
  for (int k = 0; k < 3; ++k) {
    double stat = ks_statistic_two_sample(casc[static_cast<std::size_t>(k)],
                                          ref[static_cast<std::size_t>(k)]);
    CHECK(ks_two_sample_pvalue(stat, builds, builds) > 1e-3);
  }
}

TEST_CASE("leaf sampling matches the weights") {
  Rng rng(5);
  CascadeParams p = make_params(2, {0.3, 0.6}, 4);
  CascadeWeights cw = build_cascade(p, rng);
  const TreeShape& shape = cw.shape();
  const int draws = 100000;
  std::map<std::int64_t, int> counts;
  for (int i = 0; i < draws; ++i) ++counts[cw.sample_leaf_id(rng)];
  double kept = 1.0 - cw.residual_mass();
  for (std::int64_t id = shape.first_leaf(); id < shape.vertex_count(); ++id) {
    double expect = cw.V_by_id(id) / kept;
    double emp = static_cast<double>(counts[id]) / draws;
    double se = std::sqrt(std::max(expect * (1 - expect), 1e-9) / draws);
    CHECK(std::fabs(emp - expect) < 4.5 * se);
  }

  // d=1 degenerate path: the single leaf always comes back.
  CascadeWeights point = build_cascade(make_params(2, {0.3, 0.6}, 1), rng);
  for (int i = 0; i < 10; ++i) {
    CHECK(point.sample_leaf(rng) == (VertexLabel{1, 1}));
  }
}

TEST_CASE("pair wedge law matches the zeta increments") {
  Rng rng(6);
  CascadeParams p = make_params(2, {0.3, 0.6}, 40);
  const int builds = 4000, pairs_per_build = 8;
  VectorAccumulator fractions(3);
  Accumulator residual;
  for (int b = 0; b < builds; ++b) {
    CascadeWeights cw = build_cascade(p, rng);
    residual.add(cw.residual_mass());
    std::vector<double> frac(3, 0.0);
    for (int k = 0; k < pairs_per_build; ++k) {
      VertexLabel a = cw.sample_leaf(rng);
      VertexLabel c = cw.sample_leaf(rng);
      frac[static_cast<std::size_t>(wedge(a, c))] += 1.0 / pairs_per_build;
    }
    fractions.add(frac);
  }
  const double expected[3] = {0.3, 0.3, 0.4};
  for (int lvl = 0; lvl < 3; ++lvl) {
    double se = std::sqrt(fractions.covariance(lvl, lvl) / builds);
    CHECK(std::fabs(fractions.mean(lvl) - expected[lvl]) < 3.0 * se + 2.0 * residual.mean());
  }
}

TEST_CASE("child ratios are decreasing and normalized") {
  Rng rng(7);
  CascadeParams p = make_params(2, {0.3, 0.6}, 32);
  CascadeWeights cw = build_cascade(p, rng);
  std::vector<double> ratios = cw.child_ratios(VertexLabel{2});
  double sum = 0.0, prev = 2.0;
  for (double v : ratios) {
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(cw.child_ratios(VertexLabel::root()), std::domain_error);
  CHECK_THROWS_AS(cw.child_ratios(VertexLabel{1, 1}), std::domain_error);
}

TEST_CASE("level restriction: top level of a deep cascade matches a shallow one") {
  // Dropping the bottom level and its zeta leaves the law of the upper
  // weights unchanged; compared on kept-normalized top weights.
  Rng rng(8);
  const int builds = 2500;
  const int d = 96;
  std::vector<double> deep_top, shallow_top;
  for (int b = 0; b < builds; ++b) {
    CascadeWeights two = build_cascade(make_params(2, {0.3, 0.6}, d), rng);
    std::vector<double> level = two.level_masses(1);
    double kept = 0.0;
    for (double v : level) kept += v;
    deep_top.push_back(level[0] / kept);

    CascadeWeights one = build_cascade(make_params(1, {0.3}, d), rng);
    std::vector<double> leaves = one.level_masses(1);
    kept = 0.0;
    for (double v : leaves) kept += v;
    shallow_top.push_back(leaves[0] / kept);
  }
  double stat = ks_statistic_two_sample(deep_top, shallow_top);
  CHECK(ks_two_sample_pvalue(stat, deep_top.size(), shallow_top.size()) > 1e-3);
}

TEST_CASE("truncation bound decreases in d and covers fresh builds") {
  Rng rng(9);
  CascadeParams p = make_params(2, {0.3, 0.6}, 10);
  TruncationBound b10 = truncation_bound(p, 10, 48, rng);
  TruncationBound b20 = truncation_bound(p, 20, 48, rng);
  TruncationBound b40 = truncation_bound(p, 40, 48, rng);
  CHECK(b20.mean.value < b10.mean.value);
  CHECK(b40.mean.value < b20.mean.value);

  // Hold-out validation: fresh builds stay below the reported upper estimate.
  Rng fresh(10);
  Accumulator heldout;
  for (int i = 0; i < 48; ++i) {
    heldout.add(build_cascade(make_params(2, {0.3, 0.6}, 20), fresh).residual_mass());
  }
  CHECK(heldout.mean() <= b20.upper);
}

TEST_CASE("dump emits a JSON header and one row per vertex") {
  Rng rng(11);
  CascadeParams p = make_params(2, {0.3, 0.6}, 3);
  CascadeWeights cw = build_cascade(p, rng);
  std::ostringstream os;
  cw.dump(os, 77);
  std::istringstream is(os.str());
  std::string header, columns, line;
  std::getline(is, header);
  std::getline(is, columns);
  CHECK(header.substr(0, 2) == "# ");
  CHECK(header.find("\"seed\":77") != std::string::npos);
  CHECK(header.find("\"residual_mass\"") != std::string::npos);
  CHECK(columns == "vertex_label,u,w,v,V");
  int rows = 0;
  bool saw_root = false;
  while (std::getline(is, line)) {
    ++rows;
    if (line.rfind("*,", 0) == 0) saw_root = true;
  }
  CHECK(rows == cw.shape().vertex_count());
  CHECK(saw_root);
}

TEST_CASE("identical seeds build identical cascades") {
  CascadeParams p = make_params(2, {0.3, 0.6}, 16);
  Rng a(21), b(21);
  CascadeWeights ca = build_cascade(p, a);
  CascadeWeights cb = build_cascade(p, b);
  std::ostringstream oa, ob;
  ca.dump(oa, 0);
  cb.dump(ob, 0);
  CHECK(oa.str() == ob.str());
}
