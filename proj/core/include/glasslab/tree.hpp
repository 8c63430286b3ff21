#ifndef GLASSLAB_TREE_HPP
#define GLASSLAB_TREE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "glasslab/rng.hpp"

namespace glasslab {

inline constexpr int kMaxTreeDepth = 8;

// Address of a vertex in the rooted tree: a sequence of 1-based child
// indices, empty for the root. Depth is bounded by kMaxTreeDepth.
class VertexLabel {
 public:
  VertexLabel() = default;
  VertexLabel(std::initializer_list<int> coords);

  static VertexLabel root() { return VertexLabel(); }

  int depth() const { return len_; }
  bool is_root() const { return len_ == 0; }
  int coord(int i) const;  // 0-based position, 1-based value
  VertexLabel child(int n) const;
  VertexLabel parent() const;
  VertexLabel prefix(int depth) const;

  bool operator==(const VertexLabel& o) const;
  bool operator!=(const VertexLabel& o) const { return !(*this == o); }
  bool operator<(const VertexLabel& o) const;  // lexicographic, by depth first on ties

  // Dot-joined coordinates, "*" for the root (used in all file output).
  std::string to_string() const;
  static VertexLabel parse(const std::string& text);

 private:
  std::array<std::int32_t, kMaxTreeDepth> c_{};
  std::int8_t len_ = 0;
};

// Number of common vertices on the root paths (depth of the lowest common
// ancestor); a co-distance, so larger means closer.
int wedge(const VertexLabel& a, const VertexLabel& b);

// Vertices on the path from the root to a, excluding the root.
std::vector<VertexLabel> path_to_root(const VertexLabel& a);

bool is_ancestor_or_self(const VertexLabel& ancestor, const VertexLabel& v);

// Index arithmetic for the d-regular truncation of depth r. Vertices are
// numbered level by level, root first.
class TreeShape {
 public:
  TreeShape(int d, int r);
  int d() const { return d_; }
  int r() const { return r_; }
  std::int64_t vertex_count() const { return level_offset_[static_cast<std::size_t>(r_ + 1)]; }
  std::int64_t leaf_count() const { return level_size_[static_cast<std::size_t>(r_)]; }
  std::int64_t internal_count() const { return level_offset_[static_cast<std::size_t>(r_)]; }
  std::int64_t level_offset(int depth) const { return level_offset_[static_cast<std::size_t>(depth)]; }
  std::int64_t level_size(int depth) const { return level_size_[static_cast<std::size_t>(depth)]; }
  int depth_of(std::int64_t id) const;
  std::int64_t parent(std::int64_t id) const;
  // 1-based child index n.
  std::int64_t child(std::int64_t id, int n) const;
  std::int64_t id_of(const VertexLabel& v) const;
  VertexLabel label_of(std::int64_t id) const;
  std::int64_t first_leaf() const { return level_offset_[static_cast<std::size_t>(r_)]; }

 private:
  int d_;
  int r_;
  std::vector<std::int64_t> level_offset_;
  std::vector<std::int64_t> level_size_;
};

// Genealogy-preserving permutation of the leaves of the d-regular depth-r
// tree, stored as one local child rearrangement per internal vertex and
// composed along root paths; never materialized as a d^r table.
class HierarchicalPermutation {
 public:
  static HierarchicalPermutation identity(int d, int r);
  static HierarchicalPermutation sample(int d, int r, Rng& rng);
  // Explicit local maps, one per internal vertex in level order; each map is
  // a bijection of {1..d} given as 1-based images.
  static HierarchicalPermutation from_local_maps(int d, int r,
                                                 const std::vector<std::vector<int>>& maps);

  int d() const { return shape_.d(); }
  int r() const { return shape_.r(); }

  VertexLabel apply(const VertexLabel& leaf) const;
  HierarchicalPermutation inverse() const;

  // Local child map at an internal vertex: 1-based n -> 1-based image.
  int local(std::int64_t internal_id, int n) const;

 private:
  explicit HierarchicalPermutation(int d, int r);
  TreeShape shape_;
  std::vector<std::int32_t> local_;  // internal_count x d, values 0-based
  friend class TreeShape;
};

}  // namespace glasslab

#endif
