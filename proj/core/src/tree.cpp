#include "glasslab/tree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace glasslab {

VertexLabel::VertexLabel(std::initializer_list<int> coords) {
  if (coords.size() > kMaxTreeDepth) {
    throw std::invalid_argument("VertexLabel: depth exceeds capacity");
  }
  for (int v : coords) {
    if (v < 1) throw std::invalid_argument("VertexLabel: coordinates are 1-based");
    c_[static_cast<std::size_t>(len_++)] = v;
  }
}

int VertexLabel::coord(int i) const {
  if (i < 0 || i >= len_) throw std::out_of_range("VertexLabel::coord");
  return c_[static_cast<std::size_t>(i)];
}

VertexLabel VertexLabel::child(int n) const {
  if (n < 1) throw std::invalid_argument("VertexLabel::child: 1-based index");
  if (len_ >= kMaxTreeDepth) throw std::invalid_argument("VertexLabel::child: depth capacity");
  VertexLabel out = *this;
  out.c_[static_cast<std::size_t>(out.len_++)] = n;
  return out;
}

VertexLabel VertexLabel::parent() const {
  if (len_ == 0) throw std::invalid_argument("VertexLabel::parent of root");
  VertexLabel out = *this;
  --out.len_;
  out.c_[static_cast<std::size_t>(out.len_)] = 0;
  return out;
}

VertexLabel VertexLabel::prefix(int depth) const {
  if (depth < 0 || depth > len_) throw std::invalid_argument("VertexLabel::prefix");
  VertexLabel out;
  out.len_ = static_cast<std::int8_t>(depth);
  for (int i = 0; i < depth; ++i) out.c_[static_cast<std::size_t>(i)] = c_[static_cast<std::size_t>(i)];
  return out;
}

bool VertexLabel::operator==(const VertexLabel& o) const {
  if (len_ != o.len_) return false;
  for (int i = 0; i < len_; ++i) {
    if (c_[static_cast<std::size_t>(i)] != o.c_[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

bool VertexLabel::operator<(const VertexLabel& o) const {
  if (len_ != o.len_) return len_ < o.len_;
  for (int i = 0; i < len_; ++i) {
    if (c_[static_cast<std::size_t>(i)] != o.c_[static_cast<std::size_t>(i)]) {
      return c_[static_cast<std::size_t>(i)] < o.c_[static_cast<std::size_t>(i)];
    }
  }
  return false;
}

std::string VertexLabel::to_string() const {
  if (len_ == 0) return "*";
  std::string s;
  for (int i = 0; i < len_; ++i) {
    if (i) s += '.';
    s += std::to_string(c_[static_cast<std::size_t>(i)]);
  }
  return s;
}

VertexLabel VertexLabel::parse(const std::string& text) {
  if (text == "*") return root();
  VertexLabel out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t dot = text.find('.', pos);
    if (dot == std::string::npos) dot = text.size();
    int v = std::stoi(text.substr(pos, dot - pos));
    out = out.child(v);
    pos = dot + 1;
  }
  return out;
}

int wedge(const VertexLabel& a, const VertexLabel& b) {
  int m = std::min(a.depth(), b.depth());
  int w = 0;
  while (w < m && a.coord(w) == b.coord(w)) ++w;
  return w;
}

std::vector<VertexLabel> path_to_root(const VertexLabel& a) {
  std::vector<VertexLabel> out;
  out.reserve(static_cast<std::size_t>(a.depth()));
  for (int p = 1; p <= a.depth(); ++p) out.push_back(a.prefix(p));
  return out;
}

bool is_ancestor_or_self(const VertexLabel& ancestor, const VertexLabel& v) {
  return ancestor.depth() <= v.depth() && wedge(ancestor, v) == ancestor.depth();
}

TreeShape::TreeShape(int d, int r) : d_(d), r_(r) {
  if (d < 1) throw std::invalid_argument("TreeShape: d >= 1 required");
  if (r < 1 || r > kMaxTreeDepth) throw std::invalid_argument("TreeShape: 1 <= r <= capacity");
  level_offset_.resize(static_cast<std::size_t>(r + 2));
  level_size_.resize(static_cast<std::size_t>(r + 1));
  level_offset_[0] = 0;
  std::int64_t size = 1;
  for (int p = 0; p <= r; ++p) {
    level_size_[static_cast<std::size_t>(p)] = size;
    level_offset_[static_cast<std::size_t>(p + 1)] = level_offset_[static_cast<std::size_t>(p)] + size;
    if (p < r) {
      if (size > (std::int64_t{1} << 40) / d) {
        throw std::invalid_argument("TreeShape: tree too large");
      }
      size *= d;
    }
  }
}

int TreeShape::depth_of(std::int64_t id) const {
  for (int p = 0; p <= r_; ++p) {
    if (id < level_offset_[static_cast<std::size_t>(p + 1)]) return p;
  }
  throw std::out_of_range("TreeShape::depth_of");
}

std::int64_t TreeShape::parent(std::int64_t id) const {
  int p = depth_of(id);
  if (p == 0) throw std::invalid_argument("TreeShape::parent of root");
  std::int64_t off = id - level_offset_[static_cast<std::size_t>(p)];
  return level_offset_[static_cast<std::size_t>(p - 1)] + off / d_;
}

std::int64_t TreeShape::child(std::int64_t id, int n) const {
  int p = depth_of(id);
  if (p >= r_) throw std::invalid_argument("TreeShape::child of leaf");
  if (n < 1 || n > d_) throw std::invalid_argument("TreeShape::child index out of range");
  std::int64_t off = id - level_offset_[static_cast<std::size_t>(p)];
  return level_offset_[static_cast<std::size_t>(p + 1)] + off * d_ + (n - 1);
}

std::int64_t TreeShape::id_of(const VertexLabel& v) const {
  if (v.depth() > r_) throw std::invalid_argument("TreeShape::id_of: too deep");
  std::int64_t id = 0;
  for (int i = 0; i < v.depth(); ++i) {
    int n = v.coord(i);
    if (n > d_) throw std::invalid_argument("TreeShape::id_of: coordinate out of range");
    id = child(id, n);
  }
  return id;
}

VertexLabel TreeShape::label_of(std::int64_t id) const {
  int p = depth_of(id);
  std::array<int, kMaxTreeDepth> coords{};
  std::int64_t off = id - level_offset_[static_cast<std::size_t>(p)];
  for (int i = p - 1; i >= 0; --i) {
    coords[static_cast<std::size_t>(i)] = static_cast<int>(off % d_) + 1;
    off /= d_;
  }
  VertexLabel out;
  for (int i = 0; i < p; ++i) out = out.child(coords[static_cast<std::size_t>(i)]);
  return out;
}

HierarchicalPermutation::HierarchicalPermutation(int d, int r) : shape_(d, r) {
  local_.resize(static_cast<std::size_t>(shape_.internal_count()) * d);
}

static std::int32_t& local_at_impl(std::vector<std::int32_t>& local, int d, std::int64_t v, int n) {
  return local[static_cast<std::size_t>(v) * d + n];
}

HierarchicalPermutation HierarchicalPermutation::identity(int d, int r) {
  HierarchicalPermutation pi(d, r);
  for (std::int64_t v = 0; v < pi.shape_.internal_count(); ++v) {
    for (int n = 0; n < d; ++n) local_at_impl(pi.local_, d, v, n) = n;
  }
  return pi;
}

HierarchicalPermutation HierarchicalPermutation::sample(int d, int r, Rng& rng) {
  HierarchicalPermutation pi(d, r);
  std::vector<std::int32_t> perm(static_cast<std::size_t>(d));
  for (std::int64_t v = 0; v < pi.shape_.internal_count(); ++v) {
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates per internal vertex; vertices use the same stream in
    // fixed BFS order so a seed pins the whole group element.
    for (int i = d; i > 1; --i) {
      int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i)));
      std::swap(perm[static_cast<std::size_t>(i - 1)], perm[static_cast<std::size_t>(j)]);
    }
    for (int n = 0; n < d; ++n) {
      local_at_impl(pi.local_, d, v, n) = perm[static_cast<std::size_t>(n)];
    }
  }
  return pi;
}

HierarchicalPermutation HierarchicalPermutation::from_local_maps(
    int d, int r, const std::vector<std::vector<int>>& maps) {
  HierarchicalPermutation pi(d, r);
  if (static_cast<std::int64_t>(maps.size()) != pi.shape_.internal_count()) {
    throw std::invalid_argument("from_local_maps: one map per internal vertex");
  }
  for (std::int64_t v = 0; v < pi.shape_.internal_count(); ++v) {
    const auto& map = maps[static_cast<std::size_t>(v)];
    if (static_cast<int>(map.size()) != d) {
      throw std::invalid_argument("from_local_maps: each map needs d entries");
    }
    std::vector<bool> seen(static_cast<std::size_t>(d), false);
    for (int n = 0; n < d; ++n) {
      int img = map[static_cast<std::size_t>(n)];
      if (img < 1 || img > d || seen[static_cast<std::size_t>(img - 1)]) {
        throw std::invalid_argument("from_local_maps: not a bijection of {1..d}");
      }
      seen[static_cast<std::size_t>(img - 1)] = true;
      local_at_impl(pi.local_, d, v, n) = img - 1;
    }
  }
  return pi;
}

int HierarchicalPermutation::local(std::int64_t internal_id, int n) const {
  if (internal_id < 0 || internal_id >= shape_.internal_count()) {
    throw std::out_of_range("HierarchicalPermutation::local vertex");
  }
  if (n < 1 || n > shape_.d()) throw std::out_of_range("HierarchicalPermutation::local index");
  return local_[static_cast<std::size_t>(internal_id) * shape_.d() + (n - 1)] + 1;
}

VertexLabel HierarchicalPermutation::apply(const VertexLabel& leaf) const {
  if (leaf.depth() != shape_.r()) {
    throw std::domain_error("HierarchicalPermutation::apply: not a leaf of this tree");
  }
  // Image prefix is built top-down; the local map used at step p is the one
  // attached to the image vertex of the prefix.
  VertexLabel image = VertexLabel::root();
  std::int64_t image_id = 0;
  for (int p = 0; p < leaf.depth(); ++p) {
    int n = leaf.coord(p);
    if (n > shape_.d()) {
      throw std::domain_error("HierarchicalPermutation::apply: coordinate out of range");
    }
    int m = local(image_id, n);
    image = image.child(m);
    image_id = shape_.child(image_id, m);
  }
  return image;
}

HierarchicalPermutation HierarchicalPermutation::inverse() const {
  HierarchicalPermutation inv(shape_.d(), shape_.r());
  // The inverse's local map at vertex v is the inverse of this->local at the
  // image of v; walk every internal vertex, tracking its image id.
  std::vector<std::int64_t> image(static_cast<std::size_t>(shape_.internal_count()));
  image[0] = 0;
  for (std::int64_t v = 0; v < shape_.internal_count(); ++v) {
    std::int64_t iv = image[static_cast<std::size_t>(v)];
    for (int n = 1; n <= shape_.d(); ++n) {
      int m = local(iv, n);
      local_at_impl(inv.local_, shape_.d(), v, m - 1) = n - 1;
      if (shape_.depth_of(v) + 1 < shape_.r()) {
        image[static_cast<std::size_t>(shape_.child(v, n))] = shape_.child(iv, m);
      }
    }
  }
  return inv;
}

}  // namespace glasslab
