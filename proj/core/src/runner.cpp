#include "glasslab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "glasslab/cascade.hpp"
#include "glasslab/exchangeability.hpp"
#include "glasslab/gibbs.hpp"
#include "glasslab/identities.hpp"
#include "glasslab/parallel.hpp"
#include "glasslab/point_process.hpp"
#include "glasslab/rsb.hpp"
#include "glasslab/sources.hpp"
#include "glasslab/stats.hpp"
#include "glasslab/version.hpp"

namespace glasslab {

namespace {

using nlohmann::json;

const json& require(const json& cfg, const std::string& key) {
  auto it = cfg.find(key);
  if (it == cfg.end()) throw validation_error("missing config key: " + key);
  return *it;
}

template <typename T>
T get_or(const json& cfg, const std::string& key, T fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  return it->get<T>();
}

CascadeParams cascade_params_from(const json& j) {
  CascadeParams p;
  p.r = require(j, "r").get<int>();
  p.zetas = require(j, "zetas").get<std::vector<double>>();
  p.d = require(j, "d").get<int>();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw validation_error(e.what());
  }
  return p;
}

HierarchicalKernel kernel_from(const json& j, int r) {
  HierarchicalKernel k;
  if (j.contains("level_coefs")) {
    k.level_coefs = j["level_coefs"].get<std::vector<double>>();
  } else {
    k = HierarchicalKernel::balanced(r, 1.0);
  }
  k.gain = get_or(j, "gain", 1.0);
  k.vertex_coef = get_or(j, "vertex_coef", 0.0);
  if (k.depth() != r) throw validation_error("kernel level_coefs must have r+1 entries");
  return k;
}

std::unique_ptr<RandomMeasureModel> model_from(const json& j) {
  std::string type = get_or<std::string>(j, "type", "cascade");
  if (type == "cascade") {
    CascadeParams params = cascade_params_from(j);
    HierarchicalKernel kernel =
        kernel_from(j.contains("kernel") ? j["kernel"] : json::object(), params.r);
    return std::make_unique<CascadeMeasureModel>(params, kernel);
  }
  if (type == "two_atom") {
    return std::make_unique<TwoAtomControlModel>(
        get_or(j, "top_mass", 0.7), get_or(j, "cross_overlap", 0.0),
        get_or(j, "magnetization", 0.8), get_or(j, "r", 1));
  }
  throw validation_error("unknown source type: " + type);
}

std::string fd(double v) { return format_double(v); }

MetricRecord metric(std::string name, double estimate, double se, std::uint64_t samples,
                    double tol, std::string kind, bool pass) {
  MetricRecord m;
  m.name = std::move(name);
  m.estimate = estimate;
  m.se = se;
  m.samples = samples;
  m.tolerance = tol;
  m.tolerance_kind = std::move(kind);
  m.pass = pass;
  return m;
}

// --- cascade experiment ------------------------------------------------------

struct WedgeAccumulator {
  VectorAccumulator fractions;
  Accumulator residual;
  void merge(const WedgeAccumulator& o) {
    if (fractions.dim() == 0) {
      *this = o;
      return;
    }
    if (o.fractions.dim() == 0) return;
    fractions.merge(o.fractions);
    residual.merge(o.residual);
  }
};

void run_cascade_experiment(const json& params, std::uint64_t seed, int workers,
                            RunReport& report) {
  CascadeParams cp = cascade_params_from(params);
  if (params.contains("lemma4")) {
    if (cp.r < 2) throw validation_error("lemma4 section needs depth r >= 2");
    if (get_or(params["lemma4"], "top_k", 3) > cp.d) {
      throw validation_error("lemma4 top_k cannot exceed the kept children");
    }
  }
  Rng root = Rng::keyed(seed, {1});

  if (get_or(params, "dump", false)) {
    Rng build_rng = root.substream(10);
    CascadeWeights cw = build_cascade(cp, build_rng);
    std::ostringstream os;
    cw.dump(os, seed);
    DataTable t;
    t.name = "cascade_dump";
    t.header = {"content"};
    // The dump already carries its own header/body; store it verbatim.
    std::istringstream is(os.str());
    std::string line;
    while (std::getline(is, line)) t.add_row({line});
    report.tables.push_back(std::move(t));
    report.metrics.push_back(metric("dump_residual_mass", cw.residual_mass(), 0.0, 1, 1.0,
                                    "informational", true));
    double leaf_sum = 0.0;
    for (double v : cw.level_masses(cp.r)) leaf_sum += v;
    report.metrics.push_back(metric("dump_leaf_mass_plus_residual",
                                    leaf_sum + cw.residual_mass(), 0.0, 1, 1e-9,
                                    "abs_error_vs_1", std::fabs(leaf_sum + cw.residual_mass() - 1.0) < 1e-9));
  }

  if (params.contains("wedge_law")) {
    const json& wl = params["wedge_law"];
    const std::uint64_t pairs = get_or<std::uint64_t>(wl, "pairs", 1000000);
    const int per_build = std::max(1, get_or(wl, "pairs_per_build", 16));
    std::vector<double> expected;
    if (wl.contains("expected")) {
      expected = wl["expected"].get<std::vector<double>>();
    } else {
      for (int p = 0; p <= cp.r; ++p) {
        double hi = p == cp.r ? 1.0 : cp.zetas[static_cast<std::size_t>(p)];
        double lo = p == 0 ? 0.0 : cp.zetas[static_cast<std::size_t>(p - 1)];
        expected.push_back(hi - lo);
      }
    }
    if (static_cast<int>(expected.size()) != cp.r + 1) {
      throw validation_error("wedge_law.expected needs r+1 entries");
    }
    const std::uint64_t builds = (pairs + per_build - 1) / per_build;
    const int dim = cp.r + 1;
    WedgeAccumulator total = chunked_reduce<WedgeAccumulator>(
        builds, 256, workers, root.substream(11),
        [&](Rng& stream, std::uint64_t, std::uint64_t count, WedgeAccumulator& acc) {
          acc.fractions.reset(dim);
          std::vector<double> frac(static_cast<std::size_t>(dim));
          for (std::uint64_t b = 0; b < count; ++b) {
            Rng brng = stream.substream(b);
            CascadeWeights cw = build_cascade(cp, brng);
            acc.residual.add(cw.residual_mass());
            std::fill(frac.begin(), frac.end(), 0.0);
            for (int k = 0; k < per_build; ++k) {
              std::int64_t a = cw.sample_leaf_id(brng);
              std::int64_t c = cw.sample_leaf_id(brng);
              VertexLabel la = cw.shape().label_of(a);
              VertexLabel lb = cw.shape().label_of(c);
              frac[static_cast<std::size_t>(wedge(la, lb))] += 1.0;
            }
            for (double& v : frac) v /= per_build;
            acc.fractions.add(frac);
          }
        });
    DataTable t;
    t.name = "wedge_law";
    t.header = {"level", "empirical", "se", "expected", "tolerance", "pass"};
    double mean_residual = total.residual.mean();
    for (int p = 0; p <= cp.r; ++p) {
      double emp = total.fractions.mean(p);
      double se = std::sqrt(std::max(0.0, total.fractions.covariance(p, p)) /
                            static_cast<double>(total.fractions.count()));
      double tol = 3.0 * se + 2.0 * mean_residual;
      bool pass = std::fabs(emp - expected[static_cast<std::size_t>(p)]) <= tol;
      report.metrics.push_back(metric("wedge_law_p" + std::to_string(p),
                                      emp - expected[static_cast<std::size_t>(p)], se,
                                      total.fractions.count() * per_build, tol,
                                      "3se+2residual", pass));
      t.add_row({std::to_string(p), fd(emp), fd(se), fd(expected[static_cast<std::size_t>(p)]),
                 fd(tol), pass ? "1" : "0"});
    }
    report.metrics.push_back(metric("wedge_law_mean_residual", mean_residual,
                                    total.residual.se(), total.residual.count(), 1.0,
                                    "informational", true));
    report.tables.push_back(std::move(t));
  }

  if (params.contains("lemma4")) {
    const json& l4 = params["lemma4"];
    const int builds = get_or(l4, "builds", 10000);
    const int top_k = get_or(l4, "top_k", 3);
    const double ks_level = get_or(l4, "ks_level", 0.01);
    const double corr_level = get_or(l4, "corr_level", 0.99);

    struct Lemma4Acc {
      std::vector<std::vector<double>> ratios;  // per build: top_k ratios
      std::vector<double> parent_mass;
      std::vector<double> sibling_top;  // top ratio of a second vertex
      void merge(const Lemma4Acc& o) {
        ratios.insert(ratios.end(), o.ratios.begin(), o.ratios.end());
        parent_mass.insert(parent_mass.end(), o.parent_mass.begin(), o.parent_mass.end());
        sibling_top.insert(sibling_top.end(), o.sibling_top.begin(), o.sibling_top.end());
      }
    };
    VertexLabel alpha = VertexLabel::root();
    for (int p = 0; p < cp.r - 1; ++p) alpha = alpha.child(1);
    VertexLabel beta = alpha;
    if (cp.r >= 2) {
      beta = alpha.parent().child(std::min(2, cp.d));
    }
    Lemma4Acc total = chunked_reduce<Lemma4Acc>(
        static_cast<std::uint64_t>(builds), 64, workers, root.substream(12),
        [&](Rng& stream, std::uint64_t, std::uint64_t count, Lemma4Acc& acc) {
          for (std::uint64_t b = 0; b < count; ++b) {
            Rng brng = stream.substream(b);
            CascadeWeights cw = build_cascade(cp, brng);
            std::vector<double> ratios = cw.child_ratios(alpha);
            ratios.resize(static_cast<std::size_t>(top_k));
            acc.ratios.push_back(ratios);
            acc.parent_mass.push_back(cw.V(alpha));
            if (cp.d >= 2) acc.sibling_top.push_back(cw.child_ratios(beta)[0]);
          }
        });

    // Reference: importance-resampled tilted weights, renormalized over the
    // kept points to match the truncated ratios.
    const double x = cp.zetas[static_cast<std::size_t>(cp.r - 1)];
    const double a = cp.zetas[static_cast<std::size_t>(cp.r - 2)];
    TiltOptions topt;
    topt.batch = get_or(l4, "tilt_batch", 768);
    const int per_batch = get_or(l4, "tilt_per_batch", 8);
    Rng tilt_rng = root.substream(13);
    std::vector<PDWeights> reference =
        sample_pd_tilted_batch(x, a, cp.d, builds, tilt_rng, topt, per_batch);
    DataTable t;
    t.name = "lemma4";
    t.header = {"rank", "ks_stat", "ks_pvalue", "pass"};
    for (int k = 0; k < top_k; ++k) {
      std::vector<double> sample_a, sample_b;
      sample_a.reserve(total.ratios.size());
      for (const auto& r : total.ratios) sample_a.push_back(r[static_cast<std::size_t>(k)]);
      sample_b.reserve(reference.size());
      for (const auto& w : reference) {
        sample_b.push_back(w.weights[static_cast<std::size_t>(k)] / (1.0 - w.truncation_mass));
      }
      double stat = ks_statistic_two_sample(sample_a, sample_b);
      double p = ks_two_sample_pvalue(stat, sample_a.size(), sample_b.size());
      bool pass = p >= ks_level;
      report.metrics.push_back(metric("lemma4_ks_rank" + std::to_string(k + 1), stat, 0.0,
                                      sample_a.size(), ks_level, "ks_pvalue_at_level", pass));
      report.metrics.back().extra["p_value"] = p;
      t.add_row({std::to_string(k + 1), fd(stat), fd(p), pass ? "1" : "0"});
    }
    report.tables.push_back(std::move(t));

    std::vector<double> top_ratio;
    top_ratio.reserve(total.ratios.size());
    for (const auto& r : total.ratios) top_ratio.push_back(r[0]);
    CorrelationCI ci = correlation_ci(top_ratio, total.parent_mass, corr_level);
    bool corr_pass = ci.lo <= 0.0 && 0.0 <= ci.hi;
    MetricRecord corr = metric("lemma4_ratio_parent_correlation", ci.r, 0.0, top_ratio.size(),
                               corr_level, "ci_contains_zero", corr_pass);
    corr.extra["ci_lo"] = ci.lo;
    corr.extra["ci_hi"] = ci.hi;
    report.metrics.push_back(corr);

    if (!total.sibling_top.empty()) {
      CorrelationCI sib = correlation_ci(top_ratio, total.sibling_top, corr_level);
      bool sib_pass = sib.lo <= 0.0 && 0.0 <= sib.hi;
      MetricRecord sm = metric("lemma4_sibling_independence", sib.r, 0.0, top_ratio.size(),
                               corr_level, "ci_contains_zero", sib_pass);
      sm.extra["ci_lo"] = sib.lo;
      sm.extra["ci_hi"] = sib.hi;
      report.metrics.push_back(sm);
    }
  }

  if (params.contains("truncation")) {
    const json& tr = params["truncation"];
    std::vector<int> d_list = require(tr, "d_list").get<std::vector<int>>();
    int builds = get_or(tr, "builds", 64);
    DataTable t;
    t.name = "truncation_bound";
    t.header = {"d", "mean_residual", "se", "upper"};
    Rng trng = root.substream(14);
    double prev_upper = 1.0;
    bool monotone = true;
    for (std::size_t i = 0; i < d_list.size(); ++i) {
      Rng sub = trng.substream(i);
      TruncationBound tb = truncation_bound(cp, d_list[i], builds, sub);
      t.add_row({std::to_string(d_list[i]), fd(tb.mean.value), fd(tb.mean.se), fd(tb.upper)});
      if (i > 0 && tb.mean.value > prev_upper) monotone = false;
      prev_upper = tb.upper;
    }
    report.tables.push_back(std::move(t));
    report.metrics.push_back(
        metric("truncation_decreasing_in_d", monotone ? 1.0 : 0.0, 0.0,
               static_cast<std::uint64_t>(builds * d_list.size()), 1.0, "boolean", monotone));
  }
}

// --- ggtest -------------------------------------------------------------------

void run_ggtest_experiment(const json& params, std::uint64_t seed, int workers,
                           RunReport& report) {
  auto model = model_from(require(params, "source"));
  std::vector<int> n_list = get_or(params, "n_list", std::vector<int>{2, 3, 4});
  std::vector<int> p_list = get_or(params, "p_list", std::vector<int>{1, 2, 3});
  GgiOptions opt;
  opt.samples = get_or<std::uint64_t>(params, "samples", 100000);
  opt.groups_per_measure = get_or(params, "groups_per_measure", 8);
  opt.m_window = get_or(params, "m_window", 16);
  opt.workers = workers;

  std::vector<TestFunctionSpec> fns;
  if (params.contains("functions")) {
    for (const auto& fj : params["functions"]) {
      std::string kind = require(fj, "kind").get<std::string>();
      if (kind == "one") {
        fns.push_back(TestFunctionSpec::one());
      } else if (kind == "spins") {
        std::vector<std::pair<int, int>> factors;
        for (const auto& pair : require(fj, "factors")) {
          factors.push_back({pair[0].get<int>(), pair[1].get<int>()});
        }
        fns.push_back(TestFunctionSpec::spins(std::move(factors)));
      } else {
        throw validation_error("unknown test function kind: " + kind);
      }
    }
  } else {
    fns.push_back(TestFunctionSpec::one());
    fns.push_back(TestFunctionSpec::spins({{0, 0}}));
    fns.push_back(TestFunctionSpec::spins({{0, 0}, {1, 0}}));
    fns.push_back(TestFunctionSpec::spins({{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
  }

  std::vector<GgiPanelEntry> entries;
  for (int n : n_list) {
    if (n < 2) throw validation_error("ggtest: n >= 2");
    for (int p : p_list) {
      for (const auto& f : fns) {
        bool in_range = true;
        for (const auto& [replica, coord] : f.spin_factors) {
          if (replica >= n || coord >= opt.m_window) in_range = false;
        }
        if (!in_range) continue;
        GgiPanelEntry e;
        e.f = f;
        e.n = n;
        e.p = p;
        e.label = "n" + std::to_string(n) + "_p" + std::to_string(p) + "_" + f.name();
        entries.push_back(std::move(e));
      }
    }
  }

  std::vector<GgiResult> results = ggi_panel(*model, entries, opt, Rng::keyed(seed, {2}));

  std::string expect = get_or<std::string>(params, "expect", "null");
  double violation_se = get_or(params, "violation_se", 5.0);
  DataTable t;
  t.name = "ggi_panel";
  t.header = {"entry", "delta", "se", "tolerance", "z", "pass"};
  double max_z = 0.0;
  bool all_pass = true;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const GgiResult& r = results[i];
    double tol = 3.0 * r.delta.se + 2.0 * r.mean_residual;
    double z = r.delta.se > 0.0 ? r.delta.value / r.delta.se : 0.0;
    max_z = std::max(max_z, z);
    bool pass = r.delta.value <= tol;
    all_pass = all_pass && pass;
    if (expect == "null") {
      MetricRecord mr = metric("ggi_" + entries[i].label, r.delta.value, r.delta.se,
                               r.delta.n, tol, "3se+2residual", pass);
      mr.extra["source"] = model->describe();
      report.metrics.push_back(mr);
    }
    t.add_row({entries[i].label, fd(r.delta.value), fd(r.delta.se), fd(tol), fd(z),
               pass ? "1" : "0"});
  }
  report.tables.push_back(std::move(t));
  if (expect == "violation") {
    report.metrics.push_back(metric("ggi_violation_max_z", max_z, 0.0, opt.samples,
                                    violation_se, "z_at_least", max_z >= violation_se));
  } else {
    report.metrics.push_back(metric("ggi_mean_residual",
                                    results.empty() ? 0.0 : results[0].mean_residual, 0.0,
                                    opt.samples, 1.0, "informational", true));
  }

  if (params.contains("control")) {
    const json& ctl = params["control"];
    auto control_model = model_from(require(ctl, "source"));
    GgiOptions copt = opt;
    copt.samples = get_or<std::uint64_t>(ctl, "samples", opt.samples / 4);
    double need_se = get_or(ctl, "violation_se", violation_se);
    std::vector<GgiResult> cres = ggi_panel(*control_model, entries, copt, Rng::keyed(seed, {20}));
    double cmax_z = 0.0;
    for (const auto& r : cres) {
      if (r.delta.se > 0.0) cmax_z = std::max(cmax_z, r.delta.value / r.delta.se);
    }
    report.metrics.push_back(metric("ggi_control_max_z", cmax_z, 0.0, copt.samples, need_se,
                                    "z_at_least", cmax_z >= need_se));
  }

  if (params.contains("mixture")) {
    const json& mx = params["mixture"];
    GgiOptions mopt = opt;
    mopt.samples = get_or<std::uint64_t>(mx, "samples", opt.samples);
    int n = get_or(mx, "n", 2);
    MixtureLawResult res = mixture_law_check(*model, n, mopt, Rng::keyed(seed, {3}));
    double tol = get_or(mx, "max_tv", 0.02) + 2.0 * res.mean_residual;
    report.metrics.push_back(metric("mixture_tv_distance", res.tv_distance, 0.0, res.groups,
                                    tol, "tv_plus_2residual", res.tv_distance <= tol));
  }
}

// --- ultrametric / round trip ----------------------------------------------------

Configuration planted_configuration(const std::vector<VertexLabel>& leaves,
                                    const CascadeWeights& cascade) {
  // Trie over the drawn leaf labels; siblings ordered by the cascade mass of
  // the corresponding vertex. Built directly from labels as an independent
  // construction to compare extraction against.
  struct TrieNode {
    std::map<int, TrieNode> children;
    std::vector<int> replicas;
  };
  const int r = cascade.params().r;
  TrieNode root;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    TrieNode* cur = &root;
    for (int p = 0; p < r; ++p) cur = &cur->children[leaves[l].coord(p)];
    cur->replicas.push_back(static_cast<int>(l));
  }
  Configuration cfg;
  cfg.depth = r;
  cfg.n_replicas = static_cast<int>(leaves.size());
  cfg.nodes.push_back({VertexLabel::root(), {}, {}, -1});

  struct Item {
    const TrieNode* node;
    VertexLabel original;
    int cfg_id;
  };
  std::vector<Item> queue{{&root, VertexLabel::root(), 0}};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    Item item = queue[qi];
    if (item.node->children.empty()) {
      cfg.nodes[static_cast<std::size_t>(item.cfg_id)].replicas = item.node->replicas;
      continue;
    }
    std::vector<std::pair<int, const TrieNode*>> kids(item.node->children.size());
    std::size_t idx = 0;
    for (const auto& [coord, child] : item.node->children) kids[idx++] = {coord, &child};
    std::stable_sort(kids.begin(), kids.end(), [&](const auto& a, const auto& b) {
      return cascade.V(item.original.child(a.first)) > cascade.V(item.original.child(b.first));
    });
    for (std::size_t k = 0; k < kids.size(); ++k) {
      int child_id = static_cast<int>(cfg.nodes.size());
      VertexLabel label =
          cfg.nodes[static_cast<std::size_t>(item.cfg_id)].label.child(static_cast<int>(k) + 1);
      cfg.nodes.push_back({label, {}, {}, item.cfg_id});
      cfg.nodes[static_cast<std::size_t>(item.cfg_id)].children.push_back(child_id);
      queue.push_back({kids[k].second, item.original.child(kids[k].first), child_id});
    }
  }
  return cfg;
}

void run_ultrametric_experiment(const json& params, std::uint64_t seed, int workers,
                                RunReport& report) {
  CascadeParams cp = cascade_params_from(params);
  const int matrices = get_or(params, "matrices", 1000);
  const int n_replicas = get_or(params, "replicas", 8);
  const double tol = get_or(params, "tol", 0.0);
  RSBDiscretization disc = RSBDiscretization::from_q_grid(default_q_grid(cp.r));
  std::vector<double> q = disc.q_grid();

  struct UmAcc {
    std::uint64_t ultra_pass = 0;
    std::uint64_t positive_pass = 0;
    std::uint64_t roundtrip_pass = 0;
    std::uint64_t total = 0;
    void merge(const UmAcc& o) {
      ultra_pass += o.ultra_pass;
      positive_pass += o.positive_pass;
      roundtrip_pass += o.roundtrip_pass;
      total += o.total;
    }
  };
  UmAcc acc = chunked_reduce<UmAcc>(
      static_cast<std::uint64_t>(matrices), 64, workers, Rng::keyed(seed, {4}),
      [&](Rng& stream, std::uint64_t, std::uint64_t count, UmAcc& out) {
        for (std::uint64_t i = 0; i < count; ++i) {
          Rng mrng = stream.substream(i);
          CascadeWeights cw = build_cascade(cp, mrng);
          std::vector<VertexLabel> leaves(static_cast<std::size_t>(n_replicas));
          for (auto& label : leaves) label = cw.sample_leaf(mrng);
          OverlapMatrix m = OverlapMatrix::identity_like(n_replicas);
          for (int a = 0; a < n_replicas; ++a) {
            for (int b = a + 1; b < n_replicas; ++b) {
              double v = leaf_overlap(leaves[static_cast<std::size_t>(a)],
                                      leaves[static_cast<std::size_t>(b)], q);
              m.at(a, b) = v;
              m.at(b, a) = v;
            }
          }
          ++out.total;
          if (check_ultrametric(m, tol).pass) ++out.ultra_pass;
          if (check_positivity(m)) ++out.positive_pass;
          AncestorWeights aw;
          aw.per_replica.resize(static_cast<std::size_t>(n_replicas));
          for (int l = 0; l < n_replicas; ++l) {
            for (int p = 1; p <= cp.r; ++p) {
              aw.per_replica[static_cast<std::size_t>(l)].push_back(
                  cw.V(leaves[static_cast<std::size_t>(l)].prefix(p)));
            }
          }
          Configuration extracted = extract_configuration(m, disc, aw);
          Configuration planted = planted_configuration(leaves, cw);
          if (extracted.to_json() == planted.to_json()) ++out.roundtrip_pass;
        }
      });

  auto rate = [&](std::uint64_t hits) {
    return static_cast<double>(hits) / static_cast<double>(acc.total);
  };
  report.metrics.push_back(metric("ultrametric_pass_rate", rate(acc.ultra_pass), 0.0, acc.total,
                                  1.0, "exact", acc.ultra_pass == acc.total));
  report.metrics.push_back(metric("positivity_pass_rate", rate(acc.positive_pass), 0.0,
                                  acc.total, 1.0, "exact", acc.positive_pass == acc.total));
  report.metrics.push_back(metric("roundtrip_match_rate", rate(acc.roundtrip_pass), 0.0,
                                  acc.total, 1.0, "exact", acc.roundtrip_pass == acc.total));
}

// --- tilt ---------------------------------------------------------------------

void run_tilt_experiment(const json& params, std::uint64_t seed, int /*workers*/,
                         RunReport& report) {
  const int pairs = get_or(params, "pairs", 10000);
  const int dim = get_or(params, "dim", 5);
  const double magnitude = get_or(params, "magnitude", 2.0);
  const double tol = get_or(params, "tol", 1e-12);
  const int stress_pairs = get_or(params, "stress_pairs", 1000);
  const double stress_magnitude = get_or(params, "stress_magnitude", 30.0);
  const double stress_tol = get_or(params, "stress_tol", 1e-9);

  Rng rng = Rng::keyed(seed, {5});
  auto random_interior = [&](Rng& r) {
    SimplexPoint x;
    x.x.resize(static_cast<std::size_t>(dim));
    double total = 0.0;
    std::vector<double> e(static_cast<std::size_t>(dim + 1));
    for (double& v : e) {
      v = r.next_exponential();
      total += v;
    }
    for (int t = 0; t < dim; ++t) x.x[static_cast<std::size_t>(t)] = e[static_cast<std::size_t>(t)] / total;
    return x;
  };
  auto random_tilt = [&](Rng& r, double mag, bool pin_extreme) {
    TiltVector a;
    a.a.resize(static_cast<std::size_t>(dim));
    for (double& v : a.a) v = mag * (2.0 * r.next_unit() - 1.0);
    if (pin_extreme && dim > 0) {
      a.a[0] = (r.next_u64() & 1) ? mag : -mag;
    }
    return a;
  };

  double max_identity = 0.0, max_group = 0.0, max_inverse = 0.0;
  for (int i = 0; i < pairs; ++i) {
    Rng prng = rng.substream(static_cast<std::uint64_t>(i));
    SimplexPoint x = random_interior(prng);
    TiltVector a = random_tilt(prng, magnitude, false);
    TiltVector b = random_tilt(prng, magnitude, false);
    max_identity = std::max(max_identity, tilt_identity_residual(a, x));
    TiltVector ab;
    ab.a.resize(a.a.size());
    for (std::size_t t = 0; t < a.a.size(); ++t) ab.a[t] = a.a[t] + b.a[t];
    SimplexPoint lhs = tilt_map(a, tilt_map(b, x));
    SimplexPoint rhs = tilt_map(ab, x);
    for (std::size_t t = 0; t < lhs.x.size(); ++t) {
      max_group = std::max(max_group, std::fabs(lhs.x[t] - rhs.x[t]));
    }
    TiltVector neg;
    neg.a.resize(a.a.size());
    for (std::size_t t = 0; t < a.a.size(); ++t) neg.a[t] = -a.a[t];
    SimplexPoint round = tilt_map(neg, tilt_map(a, x));
    for (std::size_t t = 0; t < round.x.size(); ++t) {
      max_inverse = std::max(max_inverse, std::fabs(round.x[t] - x.x[t]));
    }
  }
  double stress_identity = 0.0;
  for (int i = 0; i < stress_pairs; ++i) {
    Rng prng = rng.substream(0x100000ull + static_cast<std::uint64_t>(i));
    SimplexPoint x = random_interior(prng);
    TiltVector a = random_tilt(prng, stress_magnitude, true);
    stress_identity = std::max(stress_identity, tilt_identity_residual(a, x));
  }

  report.metrics.push_back(metric("tilt_normalizer_identity_max", max_identity, 0.0,
                                  static_cast<std::uint64_t>(pairs), tol, "max_le_tol",
                                  max_identity <= tol));
  report.metrics.push_back(metric("tilt_group_law_max", max_group, 0.0,
                                  static_cast<std::uint64_t>(pairs), tol, "max_le_tol",
                                  max_group <= tol));
  report.metrics.push_back(metric("tilt_inverse_roundtrip_max", max_inverse, 0.0,
                                  static_cast<std::uint64_t>(pairs), tol, "max_le_tol",
                                  max_inverse <= tol));
  report.metrics.push_back(metric("tilt_stress_identity_max", stress_identity, 0.0,
                                  static_cast<std::uint64_t>(stress_pairs), stress_tol,
                                  "max_le_tol", stress_identity <= stress_tol));
}

// --- reweighting identity --------------------------------------------------------

Configuration configuration_from_counts(const std::vector<int>& leaf_counts, int depth) {
  if (depth != 1) throw validation_error("configuration from counts supports depth 1");
  Configuration cfg;
  cfg.depth = 1;
  cfg.nodes.push_back({VertexLabel::root(), {}, {}, -1});
  int replica = 0;
  for (std::size_t k = 0; k < leaf_counts.size(); ++k) {
    if (leaf_counts[k] < 1) throw validation_error("each leaf needs at least one replica");
    int id = static_cast<int>(cfg.nodes.size());
    cfg.nodes.push_back({VertexLabel::root().child(static_cast<int>(k) + 1), {}, {}, 0});
    cfg.nodes[0].children.push_back(id);
    for (int c = 0; c < leaf_counts[k]; ++c) {
      cfg.nodes[static_cast<std::size_t>(id)].replicas.push_back(replica++);
    }
  }
  cfg.n_replicas = replica;
  return cfg;
}

void run_theorem2_experiment(const json& params, std::uint64_t seed, int workers,
                             RunReport& report) {
  auto model = model_from(require(params, "source"));
  std::vector<int> leaf_counts = require(params, "leaves").get<std::vector<int>>();
  Configuration cfg = configuration_from_counts(leaf_counts, model->discretization().r);
  std::vector<double> b = require(params, "b").get<std::vector<double>>();
  if (b.size() != cfg.nodes.size()) {
    throw validation_error("theorem2: b needs one entry per configuration vertex");
  }
  for (double v : b) {
    if (std::fabs(v) > 1.0) throw validation_error("theorem2: |b| <= 1 required");
  }
  std::vector<PhiSpec> phis;
  for (const auto& pj : require(params, "phi")) {
    PhiSpec phi;
    phi.label = get_or<std::string>(pj, "label", "phi" + std::to_string(phis.size()));
    if (pj.contains("boxes")) {
      for (const auto& bj : pj["boxes"]) {
        phi.boxes.push_back({require(bj, "node").get<int>(), require(bj, "lo").get<double>(),
                             require(bj, "hi").get<double>()});
      }
    }
    if (pj.contains("spins")) {
      for (const auto& sj : pj["spins"]) {
        phi.spin_factors.push_back({sj[0].get<int>(), sj[1].get<int>()});
      }
    }
    phis.push_back(std::move(phi));
  }
  ReweightingOptions opt;
  opt.samples = get_or<std::uint64_t>(params, "samples", 100000);
  opt.groups_per_measure = get_or(params, "groups_per_measure", 4);
  opt.m_window = get_or(params, "m_window", 8);
  opt.workers = workers;

  ReweightingResult res = reweighting_check(*model, cfg, b, phis, opt, Rng::keyed(seed, {6}));
  std::string expect = get_or<std::string>(params, "expect", "null");
  double violation_se = get_or(params, "violation_se", 5.0);
  DataTable t;
  t.name = "reweighting";
  t.header = {"phi", "lhs", "rhs", "diff", "se", "tolerance", "pass"};
  double max_z = 0.0;
  for (const auto& pr : res.phis) {
    double tol = 3.0 * pr.se + 2.0 * res.mean_residual;
    bool pass = std::fabs(pr.diff) <= tol;
    double z = pr.se > 0.0 ? std::fabs(pr.diff) / pr.se : 0.0;
    max_z = std::max(max_z, z);
    if (expect == "null") {
      MetricRecord mr = metric("theorem2_" + pr.label, pr.diff, pr.se, res.groups, tol,
                               "3se+2residual", pass);
      mr.extra["source"] = model->describe();
      report.metrics.push_back(mr);
    }
    t.add_row({pr.label, fd(pr.lhs), fd(pr.rhs), fd(pr.diff), fd(pr.se), fd(tol),
               pass ? "1" : "0"});
  }
  report.tables.push_back(std::move(t));
  if (expect == "violation") {
    report.metrics.push_back(metric("theorem2_violation_max_z", max_z, 0.0, res.groups,
                                    violation_se, "z_at_least", max_z >= violation_se));
  }
  report.metrics.push_back(
      metric("theorem2_event_rate", res.event_rate, 0.0, res.groups, 1.0, "informational", true));
}

// --- exchangeability ---------------------------------------------------------------

void run_exchangeability_experiment(const json& params, std::uint64_t seed, int workers,
                                    RunReport& report) {
  const int d = get_or(params, "d", 3);
  const int r = get_or(params, "r", 2);
  ExchangeabilityOptions opt;
  opt.trials = get_or(params, "trials", 500);
  opt.permutations = get_or(params, "permutations", 199);
  opt.workers = workers;
  const double alpha = get_or(params, "alpha", 0.01);

  HierarchicalKernel kernel =
      kernel_from(params.contains("kernel") ? params["kernel"] : json::object(), r);
  HierarchicalArraySource null_source(d, kernel, get_or(params, "replicas", 4),
                                      get_or(params, "m", 8));
  ExchangeabilityReport rep =
      hierarchical_exchangeability_test(null_source, opt, Rng::keyed(seed, {7}));
  DataTable t;
  t.name = "exchangeability_pvalues";
  t.header = {"trial", "statistic", "p_value"};
  for (std::size_t trial = 0; trial < rep.p_values.size(); ++trial) {
    for (std::size_t s = 0; s < rep.stat_names.size(); ++s) {
      t.add_row({std::to_string(trial), rep.stat_names[s], fd(rep.p_values[trial][s])});
    }
  }
  report.tables.push_back(std::move(t));

  const double uniformity_level = get_or(params, "uniformity_level", 0.01);
  for (std::size_t s = 0; s < rep.stat_names.size(); ++s) {
    double p = rep.uniformity_pvalue(static_cast<int>(s));
    report.metrics.push_back(metric("uniformity_" + rep.stat_names[s], p, 0.0,
                                    static_cast<std::uint64_t>(opt.trials), uniformity_level,
                                    "ks_pvalue_at_level", p >= uniformity_level));
  }
  bool null_ok = !rep.law_reject(alpha);
  report.metrics.push_back(metric("null_law_verdict_nonreject", null_ok ? 1.0 : 0.0, 0.0,
                                  static_cast<std::uint64_t>(opt.trials), alpha, "boolean",
                                  null_ok));

  if (params.contains("plant")) {
    const json& pl = params["plant"];
    const double min_power = get_or(pl, "min_power", 0.99);
    const int reps = get_or(pl, "reps", 20);
    ExchangeabilityOptions popt = opt;
    popt.trials = get_or(pl, "trials", opt.trials);
    CoordinatePlantSource plant(d, r, get_or(pl, "noise", 0.05));
    int rejected = 0;
    for (int rep_idx = 0; rep_idx < reps; ++rep_idx) {
      ExchangeabilityReport prep = hierarchical_exchangeability_test(
          plant, popt, Rng::keyed(seed, {7, 1000 + static_cast<std::uint64_t>(rep_idx)}));
      if (prep.law_reject(alpha)) ++rejected;
    }
    double rate = static_cast<double>(rejected) / reps;
    report.metrics.push_back(metric("plant_rejection_rate", rate, 0.0,
                                    static_cast<std::uint64_t>(reps), min_power,
                                    "rate_at_least", rate >= min_power));
  }
}

// --- independence --------------------------------------------------------------

void run_independence_experiment(const json& params, std::uint64_t seed, int workers,
                                 RunReport& report) {
  CascadeParams cp = cascade_params_from(require(params, "cascade"));
  HierarchicalKernel kernel =
      kernel_from(params.contains("kernel") ? params["kernel"] : json::object(), cp.r);
  const int n_replicas = get_or(params, "replicas", 4);
  const int m = get_or(params, "m", 16);
  const int reps = get_or(params, "reps", 100);
  const std::string mode = get_or<std::string>(params, "mode", "pipeline");
  IndependenceOptions opt;
  opt.trials = get_or(params, "trials", 1000);
  opt.permutations = get_or(params, "permutations", 199);
  opt.alpha = get_or(params, "alpha", 0.01);

  if (mode == "pipeline") {
    std::vector<std::string> summaries =
        get_or(params, "summaries",
               std::vector<std::string>{"leaf_means", "within_leaf_overlap"});
    opt.sequential = get_or(params, "sequential", true);
    const double min_nonreject = get_or(params, "min_nonreject", 0.97);
    const std::uint64_t cap = get_or<std::uint64_t>(params, "cap_draws", 50000);
    (void)0;

    struct IndAcc {
      std::uint64_t nonreject_tests = 0;
      std::uint64_t tests = 0;
      std::uint64_t nonreject_reps = 0;
      std::uint64_t reps_done = 0;
      double restarts = 0.0;
      void merge(const IndAcc& o) {
        nonreject_tests += o.nonreject_tests;
        tests += o.tests;
        nonreject_reps += o.nonreject_reps;
        reps_done += o.reps_done;
        restarts += o.restarts;
      }
    };
    IndAcc acc = chunked_reduce<IndAcc>(
        static_cast<std::uint64_t>(reps), 4, workers, Rng::keyed(seed, {8}),
        [&](Rng& stream, std::uint64_t, std::uint64_t count, IndAcc& out) {
          for (std::uint64_t i = 0; i < count; ++i) {
            Rng rep_rng = stream.substream(i);
            bool all_nonreject = true;
            double restart_sum = 0.0;
            for (std::size_t s = 0; s < summaries.size(); ++s) {
              SpinSummary which = summaries[s] == "leaf_means"
                                      ? SpinSummary::leaf_means
                                      : SpinSummary::within_leaf_overlap;
              CascadePipelineSource source(cp, kernel, n_replicas, m, which, 3, cap);
              IndependenceResult res =
                  independence_test(source, opt, rep_rng.substream(s));
              restart_sum += source.restart_rate();
              ++out.tests;
              if (res.reject(opt.alpha)) all_nonreject = false;
              else ++out.nonreject_tests;
            }
            ++out.reps_done;
            if (all_nonreject) ++out.nonreject_reps;
            out.restarts += restart_sum / static_cast<double>(summaries.size());
          }
        });
    double rate = static_cast<double>(acc.nonreject_tests) / static_cast<double>(acc.tests);
    report.metrics.push_back(metric("independence_nonrejection_rate", rate, 0.0, acc.tests,
                                    min_nonreject, "rate_at_least", rate >= min_nonreject));
    MetricRecord family = metric("independence_family_nonrejection_rate",
                                 static_cast<double>(acc.nonreject_reps) /
                                     static_cast<double>(acc.reps_done),
                                 0.0, acc.reps_done, 1.0, "informational", true);
    report.metrics.push_back(family);
    report.metrics.push_back(metric("pipeline_restart_rate",
                                    acc.restarts / static_cast<double>(acc.reps_done), 0.0,
                                    acc.reps_done, 1.0, "informational", true));
  }
  if (mode == "planted" || params.contains("planted")) {
    const json pl = params.contains("planted") ? params["planted"] : json::object();
    const double min_power = get_or(pl, "min_power", get_or(params, "min_power", 0.99));
    const double noise = get_or(pl, "noise", get_or(params, "plant_noise", 0.05));
    const int planted_reps = get_or(pl, "reps", reps);
    IndependenceOptions popt = opt;
    popt.sequential = false;
    struct PowerAcc {
      std::uint64_t reject = 0;
      std::uint64_t total = 0;
      void merge(const PowerAcc& o) {
        reject += o.reject;
        total += o.total;
      }
    };
    PowerAcc acc = chunked_reduce<PowerAcc>(
        static_cast<std::uint64_t>(planted_reps), 4, workers, Rng::keyed(seed, {9}),
        [&](Rng& stream, std::uint64_t, std::uint64_t count, PowerAcc& out) {
          for (std::uint64_t i = 0; i < count; ++i) {
            Rng rep_rng = stream.substream(i);
            PlantedDependenceSource source(cp, noise, 3);
            IndependenceResult res = independence_test(source, popt, rep_rng);
            ++out.total;
            if (res.reject(popt.alpha)) ++out.reject;
          }
        });
    double rate = static_cast<double>(acc.reject) / static_cast<double>(acc.total);
    report.metrics.push_back(metric("independence_planted_power", rate, 0.0, acc.total,
                                    min_power, "rate_at_least", rate >= min_power));
  }
  if (mode != "pipeline" && mode != "planted") {
    throw validation_error("unknown independence mode: " + mode);
  }
}

// --- ksat: sandwich, concentration probe, mcmc oracle ----------------------------

void run_ksat_experiment(const json& params, std::uint64_t seed, int workers,
                         RunReport& report) {
  const int k = get_or(params, "k", 2);
  const double alpha = get_or(params, "alpha", 1.0);
  const double beta = get_or(params, "beta", 1.0);
  Rng root = Rng::keyed(seed, {10});

  if (params.contains("sandwich")) {
    const json& sw = params["sandwich"];
    const int n = get_or(sw, "n", 16);
    const int instances = get_or(sw, "instances", 100);
    const int g_draws = get_or(sw, "g_draws", 512);
    const double gamma = get_or(sw, "gamma", 0.4);
    const double x_value = get_or(sw, "x_value", 1.5);
    const int p_max = get_or(sw, "p_max", 8);
    double s;
    try {
      s = perturbation_strength_schedule(n, gamma);
    } catch (const std::invalid_argument& e) {
      throw validation_error(e.what());
    }
    PerturbationParams pp = PerturbationParams::uniform_x(p_max, x_value, s);
    const double upper = 1.5 * s * s;  // allowed gap of log Z, unnormalized

    struct SandwichAcc {
      std::uint64_t ok = 0;
      std::uint64_t total = 0;
      double min_gap = 1e300;
      double max_gap = -1e300;
      double min_margin_se = 1e300;
      void merge(const SandwichAcc& o) {
        ok += o.ok;
        total += o.total;
        min_gap = std::min(min_gap, o.min_gap);
        max_gap = std::max(max_gap, o.max_gap);
        min_margin_se = std::min(min_margin_se, o.min_margin_se);
      }
    };
    SandwichAcc acc = chunked_reduce<SandwichAcc>(
        static_cast<std::uint64_t>(instances), 8, workers, root.substream(1),
        [&](Rng& stream, std::uint64_t, std::uint64_t count, SandwichAcc& out) {
          out.min_gap = 1e300;
          out.max_gap = -1e300;
          out.min_margin_se = 1e300;
          for (std::uint64_t i = 0; i < count; ++i) {
            Rng irng = stream.substream(i);
            Rng disorder = irng.substream(1);
            GibbsEnsemble base =
                make_ksat_ensemble(KSatInstance::sample(n, k, alpha, disorder), beta);
            std::vector<double> lw = log_weight_vector(base);
            double log_z0 = log_sum_exp(lw);
            Accumulator gap;
            std::vector<double> shifted(lw.size());
            Rng grng = irng.substream(2);
            for (int g = 0; g < g_draws; ++g) {
              Rng one = grng.substream(static_cast<std::uint64_t>(g));
              PerturbationField field = PerturbationField::build(n, pp, one);
              for (std::size_t msk = 0; msk < lw.size(); ++msk) {
                shifted[msk] = lw[msk] + s * field.value_mask(static_cast<std::uint32_t>(msk));
              }
              gap.add(log_sum_exp(shifted) - log_z0);
            }
            double g_hat = gap.mean();
            double g_se = gap.se();
            out.min_gap = std::min(out.min_gap, g_hat);
            out.max_gap = std::max(out.max_gap, g_hat);
            double margin = std::min(g_hat, upper - g_hat);
            out.min_margin_se = std::min(out.min_margin_se, g_se > 0 ? margin / g_se : 1e300);
            ++out.total;
            if (g_hat >= 0.0 && g_hat <= upper) ++out.ok;
          }
        });
    MetricRecord m = metric("sandwich_holds_per_instance",
                            static_cast<double>(acc.ok) / static_cast<double>(acc.total), 0.0,
                            acc.total, 1.0, "exact", acc.ok == acc.total);
    m.extra["min_gap"] = acc.min_gap;
    m.extra["max_gap"] = acc.max_gap;
    m.extra["upper_bound"] = upper;
    m.extra["min_margin_over_se"] = acc.min_margin_se;
    report.metrics.push_back(m);
  }

  if (params.contains("probe")) {
    const json& pb = params["probe"];
    std::vector<int> n_list = get_or(pb, "n_list", std::vector<int>{8, 12, 16, 20});
    const int trials = get_or(pb, "trials", 384);
    const double gamma = get_or(pb, "gamma", 0.4);
    const double max_exponent = get_or(pb, "max_exponent", 0.5);
    ConcentrationTable table;
    Rng probe_rng = root.substream(2);
    try {
      table = concentration_probe(ModelFamily::ksat, n_list, beta, k, alpha, gamma, trials,
                                  probe_rng);
    } catch (const std::invalid_argument& e) {
      throw validation_error(e.what());
    }
    DataTable t;
    t.name = "concentration_probe";
    t.header = {"n", "mad", "se", "bound_ratio"};
    for (const auto& row : table.rows) {
      t.add_row({std::to_string(row.n_sites), fd(row.mad.value), fd(row.mad.se),
                 fd(row.bound_ratio)});
    }
    report.tables.push_back(std::move(t));
    double limit = max_exponent + 2.0 * table.growth.slope_se;
    MetricRecord m = metric("concentration_growth_exponent", table.growth.slope,
                            table.growth.slope_se, static_cast<std::uint64_t>(trials), limit,
                            "slope_le_half_plus_2se", table.growth.slope <= limit);
    report.metrics.push_back(m);
  }

  if (params.contains("dump_instance")) {
    const json& di = params["dump_instance"];
    const int n = get_or(di, "n", 8);
    const int n_replicas = get_or(di, "replicas", 8);
    Rng drng = root.substream(4);
    KSatInstance inst = KSatInstance::sample(n, k, alpha, drng);
    GibbsEnsemble ensemble = make_ksat_ensemble(inst, beta);
    std::ostringstream inst_os;
    write_instance(inst_os, inst, beta, seed);
    report.raw_files.push_back({"instance.csv", inst_os.str()});

    McmcOptions dopt;
    std::vector<SpinConfiguration> replicas =
        metropolis_replicas(ensemble, n_replicas, 8, drng, dopt);
    std::ostringstream rep_os;
    write_replicas(rep_os, replicas);
    report.raw_files.push_back({"replicas.csv", rep_os.str()});
  }

  if (params.contains("mcmc")) {
    const json& mc = params["mcmc"];
    const int n = get_or(mc, "n", 8);
    const int instances = get_or(mc, "instances", 10);
    const int draws = get_or(mc, "draws", 40000);
    McmcOptions mopt;
    mopt.burnin_sweeps = get_or(mc, "burnin", 200);
    mopt.thin_sweeps = get_or(mc, "thin", 1);
    const double family_level = get_or(mc, "family_level", 0.01);
    const double min_expected = get_or(mc, "min_expected", 5.0);
    const double level = family_level / instances;
    if (n > 20) throw validation_error("mcmc check: n <= 20");

    struct McmcAcc {
      std::uint64_t pass = 0;
      std::uint64_t total = 0;
      double min_p = 1.0;
      void merge(const McmcAcc& o) {
        pass += o.pass;
        total += o.total;
        min_p = std::min(min_p, o.min_p);
      }
    };
    McmcAcc acc = chunked_reduce<McmcAcc>(
        static_cast<std::uint64_t>(instances), 1, workers, root.substream(3),
        [&](Rng& stream, std::uint64_t, std::uint64_t count, McmcAcc& out) {
          for (std::uint64_t i = 0; i < count; ++i) {
            Rng irng = stream.substream(i);
            Rng disorder = irng.substream(1);
            GibbsEnsemble ensemble =
                make_ksat_ensemble(KSatInstance::sample(n, k, alpha, disorder), beta);
            GibbsTable exact = enumerate_gibbs(ensemble);
            Rng chains = irng.substream(2);
            std::vector<SpinConfiguration> replicas =
                metropolis_replicas(ensemble, draws, 1, chains, mopt);
            std::vector<std::uint64_t> counts(exact.prob.size(), 0);
            for (const auto& rep : replicas) ++counts[spin_mask(rep)];
            // Merge low-probability cells until expected counts clear the bar.
            std::vector<std::size_t> order(exact.prob.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
              return exact.prob[a] < exact.prob[b];
            });
            std::vector<std::pair<double, double>> cells;  // expected, observed
            double exp_acc = 0.0, obs_acc = 0.0;
            for (std::size_t idx : order) {
              exp_acc += exact.prob[idx] * draws;
              obs_acc += static_cast<double>(counts[idx]);
              if (exp_acc >= min_expected) {
                cells.push_back({exp_acc, obs_acc});
                exp_acc = 0.0;
                obs_acc = 0.0;
              }
            }
            if (exp_acc > 0.0 && !cells.empty()) {
              cells.back().first += exp_acc;
              cells.back().second += obs_acc;
            }
            double stat = 0.0;
            for (const auto& [e, o] : cells) stat += (o - e) * (o - e) / e;
            double p = chi2_sf(stat, static_cast<double>(cells.size() - 1));
            out.min_p = std::min(out.min_p, p);
            ++out.total;
            if (p >= level) ++out.pass;
          }
        });
    MetricRecord m = metric("mcmc_exact_chi2_pass",
                            static_cast<double>(acc.pass) / static_cast<double>(acc.total), 0.0,
                            acc.total, level, "all_pass_bonferroni", acc.pass == acc.total);
    m.extra["min_p_value"] = acc.min_p;
    m.extra["per_instance_level"] = level;
    report.metrics.push_back(m);
  }
}

}  // namespace

json MetricRecord::to_json() const {
  json j;
  j["name"] = name;
  j["estimate"] = estimate;
  j["se"] = se;
  j["samples"] = samples;
  j["tolerance"] = tolerance;
  j["tolerance_kind"] = tolerance_kind;
  j["pass"] = pass;
  if (!extra.is_null()) j["extra"] = extra;
  return j;
}

bool RunReport::all_passed() const {
  for (const auto& m : metrics) {
    if (!m.pass) return false;
  }
  return true;
}

json RunReport::to_json(bool include_timing) const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["library_version"] = kVersion;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["workers"] = workers;
  j["config"] = config_echo;
  j["metrics"] = json::array();
  for (const auto& m : metrics) j["metrics"].push_back(m.to_json());
  j["all_passed"] = all_passed();
  if (include_timing) j["wall_seconds"] = wall_seconds;
  return j;
}

RunReport run_experiment(const json& config, std::optional<std::uint64_t> seed_override,
                         std::optional<int> workers_override) {
  if (!config.is_object()) throw validation_error("config must be a JSON object");
  int schema = get_or(config, "schema_version", 1);
  if (schema != kSchemaVersion) {
    throw validation_error("unsupported schema_version: " + std::to_string(schema));
  }
  std::string experiment = require(config, "experiment").get<std::string>();
  std::uint64_t seed =
      seed_override ? *seed_override : get_or<std::uint64_t>(config, "seed", 1);
  int workers = workers_override && *workers_override > 0
                    ? *workers_override
                    : get_or(config, "workers", 0);
  workers = resolve_workers(workers);
  json params = config.contains("params") ? config["params"] : json::object();

  RunReport report;
  report.experiment = experiment;
  report.seed = seed;
  report.workers = workers;
  report.config_echo = config;
  if (seed_override) report.config_echo["seed"] = seed;

  auto started = std::chrono::steady_clock::now();
  if (experiment == "cascade") {
    run_cascade_experiment(params, seed, workers, report);
  } else if (experiment == "ggtest") {
    run_ggtest_experiment(params, seed, workers, report);
  } else if (experiment == "ultrametric") {
    run_ultrametric_experiment(params, seed, workers, report);
  } else if (experiment == "tilt") {
    run_tilt_experiment(params, seed, workers, report);
  } else if (experiment == "theorem2") {
    run_theorem2_experiment(params, seed, workers, report);
  } else if (experiment == "exchangeability") {
    run_exchangeability_experiment(params, seed, workers, report);
  } else if (experiment == "independence") {
    run_independence_experiment(params, seed, workers, report);
  } else if (experiment == "ksat-concentration") {
    run_ksat_experiment(params, seed, workers, report);
  } else {
    throw validation_error("unknown experiment: " + experiment);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

RunReport run_experiment_file(const std::string& config_path,
                              std::optional<std::uint64_t> seed_override,
                              std::optional<int> workers_override) {
  std::ifstream is(config_path);
  if (!is) throw validation_error("cannot open config: " + config_path);
  json config;
  try {
    is >> config;
  } catch (const std::exception& e) {
    throw validation_error(std::string("config parse error: ") + e.what());
  }
  return run_experiment(config, seed_override, workers_override);
}

void emit_report(const RunReport& report, const std::string& out_dir) {
  ensure_directory(out_dir);
  write_text_file(out_dir + "/report.json", report.to_json(true).dump(2) + "\n");
  for (const auto& table : report.tables) {
    std::string head = "# schema_version=" + std::to_string(kSchemaVersion) + " experiment=" +
                       report.experiment + " seed=" + std::to_string(report.seed) + "\n";
    write_text_file(out_dir + "/" + table.name + ".csv", head + table.to_csv());
  }
  for (const auto& [name, content] : report.raw_files) {
    write_text_file(out_dir + "/" + name, content);
  }
}

}  // namespace glasslab
