#include "glasslab/rsb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace glasslab {

RSBDiscretization RSBDiscretization::from_q_grid(const std::vector<double>& q) {
  if (q.size() < 2) throw std::invalid_argument("from_q_grid: need at least two endpoints");
  RSBDiscretization disc;
  disc.r = static_cast<int>(q.size()) - 1;
  disc.intervals.resize(q.size());
  for (std::size_t p = 0; p + 1 < q.size(); ++p) {
    disc.intervals[p] = Interval{q[p], q[p + 1], false};
  }
  double top = q.back();
  disc.intervals.back() = Interval{top, std::max(1.0, top), true};
  disc.validate();
  return disc;
}

void RSBDiscretization::validate() const {
  if (r < 1 || static_cast<int>(intervals.size()) != r + 1) {
    throw std::invalid_argument("RSBDiscretization: need r+1 intervals");
  }
  if (intervals[0].lo < 0.0) {
    throw std::invalid_argument("RSBDiscretization: overlaps are nonnegative, q0 >= 0");
  }
  for (int p = 0; p <= r; ++p) {
    const Interval& ip = intervals[static_cast<std::size_t>(p)];
    if (ip.hi < ip.lo || (!ip.closed_right && ip.hi == ip.lo)) {
      throw std::invalid_argument("RSBDiscretization: empty interval");
    }
    if (p > 0) {
      const Interval& prev = intervals[static_cast<std::size_t>(p - 1)];
      if (ip.lo < prev.hi || (prev.closed_right && ip.lo == prev.hi) || prev.lo >= ip.lo) {
        throw std::invalid_argument("RSBDiscretization: intervals must be disjoint and ordered");
      }
    }
  }
}

std::vector<double> RSBDiscretization::q_grid() const {
  std::vector<double> q(intervals.size());
  for (std::size_t p = 0; p < intervals.size(); ++p) q[p] = intervals[p].lo;
  return q;
}

std::optional<int> RSBDiscretization::classify(double value) const {
  for (int p = 0; p <= r; ++p) {
    if (intervals[static_cast<std::size_t>(p)].contains(value)) return p;
  }
  return std::nullopt;
}

UltrametricReport check_ultrametric(const OverlapMatrix& m, double tol) {
  UltrametricReport report;
  for (int a = 0; a < m.n; ++a) {
    for (int b = 0; b < m.n; ++b) {
      if (b == a) continue;
      for (int c = b + 1; c < m.n; ++c) {
        if (c == a) continue;
        double lhs = m.at(b, c);
        double rhs = std::min(m.at(a, b), m.at(a, c));
        if (lhs < rhs - tol) {
          double gap = rhs - lhs;
          if (gap > report.violation) {
            report.pass = false;
            report.violation = gap;
            report.witness = {a, b, c};
          }
        }
      }
    }
  }
  return report;
}

bool check_positivity(const OverlapMatrix& m, double tol) {
  for (int i = 0; i < m.n; ++i) {
    for (int j = i + 1; j < m.n; ++j) {
      if (m.at(i, j) < -tol) return false;
    }
  }
  return true;
}

std::vector<int> Configuration::leaf_ids() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].children.empty()) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Configuration::replicas_below(int node_id) const {
  std::vector<int> out;
  std::vector<int> stack{node_id};
  while (!stack.empty()) {
    int t = stack.back();
    stack.pop_back();
    const Node& node = nodes[static_cast<std::size_t>(t)];
    out.insert(out.end(), node.replicas.begin(), node.replicas.end());
    for (int c : node.children) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

VertexLabel Configuration::leaf_of(int replica) const {
  for (const Node& node : nodes) {
    if (node.children.empty() &&
        std::find(node.replicas.begin(), node.replicas.end(), replica) != node.replicas.end()) {
      return node.label;
    }
  }
  throw std::out_of_range("Configuration::leaf_of: unknown replica");
}

int Configuration::wedge_of(int a, int b) const { return wedge(leaf_of(a), leaf_of(b)); }

namespace {

void json_tree(const Configuration& cfg, int node_id, std::ostringstream& os) {
  const Configuration::Node& node = cfg.nodes[static_cast<std::size_t>(node_id)];
  os << "{\"children\":[";
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (i) os << ',';
    json_tree(cfg, node.children[i], os);
  }
  os << "]}";
}

}  // namespace

std::string Configuration::to_json() const {
  std::ostringstream os;
  os << "{\"schema_version\":1,\"depth\":" << depth << ",\"tree\":";
  json_tree(*this, 0, os);
  os << ",\"assignment\":[";
  for (int l = 0; l < n_replicas; ++l) {
    if (l) os << ',';
    os << '"' << leaf_of(l).to_string() << '"';
  }
  os << "]}";
  return os.str();
}

namespace {

struct Cluster {
  std::vector<int> replicas;
  double weight = 0.0;  // ordering key
};

}  // namespace

Configuration extract_configuration(const OverlapMatrix& m, const RSBDiscretization& disc,
                                    const std::optional<AncestorWeights>& weights) {
  const int n = m.n;
  if (n < 1) throw std::invalid_argument("extract_configuration: empty matrix");
  if (weights) {
    if (static_cast<int>(weights->per_replica.size()) != n) {
      throw std::invalid_argument("extract_configuration: weights size mismatch");
    }
    for (const auto& w : weights->per_replica) {
      if (static_cast<int>(w.size()) != disc.r) {
        throw std::invalid_argument("extract_configuration: weights need one entry per depth");
      }
    }
  }

  // Classified wedge for every pair; the diagonal sits at full depth.
  std::vector<int> wedges(static_cast<std::size_t>(n) * n, disc.r);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto p = disc.classify(m.at(i, j));
      if (!p) {
        throw support_error("extract_configuration: overlap falls outside every interval");
      }
      wedges[static_cast<std::size_t>(i) * n + j] = *p;
      wedges[static_cast<std::size_t>(j) * n + i] = *p;
    }
  }
  // Triple coherence: among the three pairwise wedges the two smallest agree.
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        int ab = wedges[static_cast<std::size_t>(a) * n + b];
        int ac = wedges[static_cast<std::size_t>(a) * n + c];
        int bc = wedges[static_cast<std::size_t>(b) * n + c];
        int lo = std::min({ab, ac, bc});
        int cnt = (ab == lo) + (ac == lo) + (bc == lo);
        if (cnt < 2) {
          throw inconsistency_error("extract_configuration: wedge pattern is not ultrametric (" +
                                    std::to_string(a) + "," + std::to_string(b) + "," +
                                    std::to_string(c) + ")");
        }
      }
    }
  }

  Configuration cfg;
  cfg.depth = disc.r;
  cfg.n_replicas = n;
  cfg.nodes.push_back({VertexLabel::root(), {}, {}, -1});

  // Recursive splitting: members of a node at depth p group by wedge >= p+1.
  struct Frame {
    int node_id;
    int depth;
    std::vector<int> members;
  };
  std::vector<Frame> stack;
  {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    stack.push_back({0, 0, std::move(all)});
  }
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    if (frame.depth == disc.r) {
      cfg.nodes[static_cast<std::size_t>(frame.node_id)].replicas = frame.members;
      continue;
    }
    // Partition members into clusters joined at depth > frame.depth.
    std::vector<Cluster> clusters;
    std::vector<int> assignment(frame.members.size(), -1);
    for (std::size_t i = 0; i < frame.members.size(); ++i) {
      if (assignment[i] >= 0) continue;
      int cid = static_cast<int>(clusters.size());
      clusters.push_back({});
      assignment[i] = cid;
      clusters[static_cast<std::size_t>(cid)].replicas.push_back(frame.members[i]);
      for (std::size_t j = i + 1; j < frame.members.size(); ++j) {
        if (assignment[j] >= 0) continue;
        if (wedges[static_cast<std::size_t>(frame.members[i]) * n + frame.members[j]] >
            frame.depth) {
          assignment[j] = cid;
          clusters[static_cast<std::size_t>(cid)].replicas.push_back(frame.members[j]);
        }
      }
    }
    // Sibling order: by cluster weight when provided, else by preimage count;
    // smallest replica index breaks ties deterministically.
    for (Cluster& cl : clusters) {
      if (weights) {
        int rep = cl.replicas.front();
        double w = weights->per_replica[static_cast<std::size_t>(rep)]
                                       [static_cast<std::size_t>(frame.depth)];
        for (int other : cl.replicas) {
          double wo = weights->per_replica[static_cast<std::size_t>(other)]
                                          [static_cast<std::size_t>(frame.depth)];
          if (std::fabs(wo - w) > 1e-12) {
            throw inconsistency_error(
                "extract_configuration: replicas in one cluster disagree on its weight");
          }
        }
        cl.weight = w;
      } else {
        cl.weight = static_cast<double>(cl.replicas.size());
      }
    }
    std::stable_sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      return a.replicas.front() < b.replicas.front();
    });
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      const VertexLabel parent_label = cfg.nodes[static_cast<std::size_t>(frame.node_id)].label;
      int child_id = static_cast<int>(cfg.nodes.size());
      cfg.nodes.push_back(
          {parent_label.child(static_cast<int>(k) + 1), {}, {}, frame.node_id});
      cfg.nodes[static_cast<std::size_t>(frame.node_id)].children.push_back(child_id);
      stack.push_back({child_id, frame.depth + 1, clusters[k].replicas});
    }
  }
  return cfg;
}

ClusterWeights cluster_weights(const Configuration& config,
                               const std::vector<SupportPoint>& points,
                               const RSBDiscretization& disc, double tol) {
  const int n = config.n_replicas;
  for (const SupportPoint& pt : points) {
    if (static_cast<int>(pt.overlaps.size()) != n) {
      throw std::invalid_argument("cluster_weights: point overlap length mismatch");
    }
  }
  ClusterWeights out;
  out.w.assign(config.nodes.size(), 0.0);
  out.delta.assign(config.nodes.size(), 0.0);

  std::vector<std::vector<int>> below(config.nodes.size());
  for (std::size_t t = 0; t < config.nodes.size(); ++t) {
    below[t] = config.replicas_below(static_cast<int>(t));
    if (config.nodes[t].children.empty() && below[t].empty()) {
      throw std::invalid_argument("cluster_weights: leaf without assigned replicas");
    }
  }

  for (std::size_t t = 0; t < config.nodes.size(); ++t) {
    int depth = config.nodes[t].label.depth();
    double threshold = disc.q(depth);
    double w = 0.0;
    for (const SupportPoint& pt : points) {
      bool inside = true;
      for (int rep : below[t]) {
        if (pt.overlaps[static_cast<std::size_t>(rep)] < threshold) {
          inside = false;
          break;
        }
      }
      if (inside) w += pt.mass;
    }
    out.w[t] = w;
  }
  for (std::size_t t = 0; t < config.nodes.size(); ++t) {
    double child_sum = 0.0;
    for (int c : config.nodes[t].children) child_sum += out.w[static_cast<std::size_t>(c)];
    out.delta[t] = out.w[t] - child_sum;
    if (out.delta[t] < -tol) {
      throw inconsistency_error("cluster_weights: negative remainder, support not ultrametric");
    }
    if (out.delta[t] < 0.0) out.delta[t] = 0.0;
  }
  return out;
}

namespace {

struct MassNode {
  std::map<int, MassNode> children;  // old child coordinate -> subtree
  double mass = 0.0;
};

void relabel(const MassNode& node, const VertexLabel& old_label, const VertexLabel& new_label,
             ClusterRelabelling& out) {
  out.map[old_label] = new_label;
  std::vector<std::pair<int, const MassNode*>> kids;
  kids.reserve(node.children.size());
  for (const auto& [coord, child] : node.children) kids.push_back({coord, &child});
  std::stable_sort(kids.begin(), kids.end(),
                   [](const auto& a, const auto& b) { return a.second->mass > b.second->mass; });
  for (std::size_t k = 0; k < kids.size(); ++k) {
    relabel(*kids[k].second, old_label.child(kids[k].first),
            new_label.child(static_cast<int>(k) + 1), out);
  }
}

}  // namespace

ClusterRelabelling enumerate_clusters(const std::vector<std::pair<VertexLabel, double>>& leaves,
                                      int r) {
  if (leaves.empty()) throw std::invalid_argument("enumerate_clusters: no leaves");
  MassNode root;
  for (const auto& [label, mass] : leaves) {
    if (label.depth() != r) throw std::invalid_argument("enumerate_clusters: leaf depth mismatch");
    if (!(mass > 0.0)) throw std::invalid_argument("enumerate_clusters: masses must be positive");
    MassNode* cur = &root;
    cur->mass += mass;
    for (int p = 0; p < r; ++p) {
      cur = &cur->children[label.coord(p)];
      cur->mass += mass;
    }
  }
  ClusterRelabelling out;
  relabel(root, VertexLabel::root(), VertexLabel::root(), out);
  for (const auto& [label, mass] : leaves) {
    out.sorted_leaves.push_back({out.map.at(label), mass});
  }
  std::sort(out.sorted_leaves.begin(), out.sorted_leaves.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace glasslab
