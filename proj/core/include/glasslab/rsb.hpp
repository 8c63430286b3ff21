#ifndef GLASSLAB_RSB_HPP
#define GLASSLAB_RSB_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glasslab/gibbs.hpp"
#include "glasslab/tree.hpp"

namespace glasslab {

struct support_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct inconsistency_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool closed_right = false;
  bool contains(double v) const {
    return v >= lo && (closed_right ? v <= hi : v < hi);
  }
};

// r+1 disjoint ordered intervals covering the admissible overlap values;
// interval p holds the representative overlap q_p at its left endpoint.
struct RSBDiscretization {
  int r = 1;
  std::vector<Interval> intervals;  // size r+1

  // Half-open [q_p, q_{p+1}) up to the last interval, which is closed on the
  // right and stretched to cover max(1, q_r).
  static RSBDiscretization from_q_grid(const std::vector<double>& q);

  double q(int p) const { return intervals[static_cast<std::size_t>(p)].lo; }
  std::vector<double> q_grid() const;
  // Interval index of a value, or nullopt when it falls in a gap (gaps are
  // reported, not repaired).
  std::optional<int> classify(double value) const;
  void validate() const;
};

struct UltrametricReport {
  bool pass = true;
  std::array<int, 3> witness{-1, -1, -1};
  double violation = 0.0;
};

// Pass iff R(b,c) >= min(R(a,b), R(a,c)) - tol for every triple.
UltrametricReport check_ultrametric(const OverlapMatrix& m, double tol);

bool check_positivity(const OverlapMatrix& m, double tol = 1e-9);

// Labelled clustering tree of depth r plus the replica-to-leaf assignment.
// Children at each vertex are ordered (index 1 first); the ordering is by
// decreasing cluster weight when weights are available.
struct Configuration {
  struct Node {
    VertexLabel label;
    std::vector<int> children;  // node ids
    std::vector<int> replicas;  // assigned replica indices (leaves only)
    int parent = -1;
  };
  std::vector<Node> nodes;  // node 0 is the root
  int depth = 0;
  int n_replicas = 0;

  const Node& root() const { return nodes[0]; }
  std::vector<int> leaf_ids() const;
  // Replica indices assigned at or below node t.
  std::vector<int> replicas_below(int node_id) const;
  // Leaf label assigned to a replica.
  VertexLabel leaf_of(int replica) const;
  int wedge_of(int replica_a, int replica_b) const;
  std::string to_json() const;
};

// Per-replica weight information used to order siblings: weight_at(replica,
// depth) is the mass of the depth-level cluster around that replica's leaf.
struct AncestorWeights {
  std::vector<std::vector<double>> per_replica;  // n x r, depths 1..r
};

// Builds the unique configuration whose leaf wedges reproduce the classified
// overlaps. Ordering of siblings: decreasing cluster weight when ancestor
// weights are given, else decreasing preimage count with smallest-replica
// tie break.
Configuration extract_configuration(const OverlapMatrix& m, const RSBDiscretization& disc,
                                    const std::optional<AncestorWeights>& weights = std::nullopt);

// A finite weighted support with an overlap value against each replica.
struct SupportPoint {
  double mass = 0.0;
  std::vector<double> overlaps;  // one per replica
};

struct ClusterWeights {
  std::vector<double> w;      // W_t per node
  std::vector<double> delta;  // delta_t per node
};

// W_t = mass with overlap >= q_|t| against every replica below t; delta_t
// subtracts the children. Negative delta beyond tol means the support is not
// ultrametrically consistent with the configuration.
ClusterWeights cluster_weights(const Configuration& config,
                               const std::vector<SupportPoint>& points,
                               const RSBDiscretization& disc, double tol = 1e-9);

// Relabels a finite set of leaf masses so that sibling aggregate masses
// decrease at every vertex, recursively from the root.
struct ClusterRelabelling {
  std::map<VertexLabel, VertexLabel> map;  // old label -> new label, all depths
  std::vector<std::pair<VertexLabel, double>> sorted_leaves;  // new labels
};

ClusterRelabelling enumerate_clusters(const std::vector<std::pair<VertexLabel, double>>& leaves,
                                      int r);

}  // namespace glasslab

#endif
