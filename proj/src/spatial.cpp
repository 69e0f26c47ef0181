#include "motionorder/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace motionorder {

void GridDiscretization::validate() const {
  if (bits < 1 || bits > 31)
    throw ValidationError("grid resolution bits must be in [1,31], got " + std::to_string(bits));
  if (box && (box->empty() || box->width() < 0 || box->height() < 0))
    throw ValidationError("quantization box is empty");
}

Cell quantize(Vec2 p, const BoundingBox& box, int bits) {
  const double cells = std::ldexp(1.0, bits);
  const auto max_cell = static_cast<std::uint32_t>((std::uint64_t{1} << bits) - 1);
  auto axis = [&](double v, double lo, double extent) -> std::uint32_t {
    if (!(extent > 0.0)) return 0;
    const double u = std::floor((v - lo) / extent * cells);
    if (!(u > 0.0)) return 0;
    if (u >= static_cast<double>(max_cell)) return max_cell;
    return static_cast<std::uint32_t>(u);
  };
  return {axis(p.x, box.min_x, box.width()), axis(p.y, box.min_y, box.height())};
}

std::uint64_t hilbert_index(Cell c, int bits) {
  const std::uint64_t side = std::uint64_t{1} << bits;
  std::uint64_t x = c.x, y = c.y;
  std::uint64_t d = 0;
  for (std::uint64_t s = side >> 1; s > 0; s >>= 1) {
    const std::uint64_t rx = (x & s) ? 1 : 0;
    const std::uint64_t ry = (y & s) ? 1 : 0;
    d += s * s * ((3 * rx) ^ ry);
    if (ry == 0) {
      if (rx == 1) {
        x = side - 1 - x;
        y = side - 1 - y;
      }
      std::swap(x, y);
    }
  }
  return d;
}

Cell hilbert_cell(std::uint64_t index, int bits) {
  const std::uint64_t side = std::uint64_t{1} << bits;
  std::uint64_t x = 0, y = 0, t = index;
  for (std::uint64_t s = 1; s < side; s <<= 1) {
    const std::uint64_t rx = 1 & (t / 2);
    const std::uint64_t ry = 1 & (t ^ rx);
    if (ry == 0) {
      if (rx == 1) {
        x = s - 1 - x;
        y = s - 1 - y;
      }
      std::swap(x, y);
    }
    x += s * rx;
    y += s * ry;
    t /= 4;
  }
  return {static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)};
}

std::uint64_t zorder_index(Cell c, int bits) {
  const std::uint64_t max_cell = (std::uint64_t{1} << bits) - 1;
  const std::uint64_t row = max_cell - c.y; // row 0 is the northern edge
  std::uint64_t code = 0;
  for (int b = bits - 1; b >= 0; --b) {
    code = (code << 1) | ((row >> b) & 1U);
    code = (code << 1) | ((static_cast<std::uint64_t>(c.x) >> b) & 1U);
  }
  return code;
}

namespace {

template <typename IndexFn>
std::vector<Rank> curve_order(std::span<const Vec2> frame, const GridDiscretization& disc,
                              IndexFn&& index) {
  disc.validate();
  const BoundingBox box = disc.box ? *disc.box : BoundingBox::of(frame);
  std::vector<std::uint64_t> keys(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i)
    keys[i] = index(quantize(frame[i], box, disc.bits), disc.bits);
  return ranks_from_keys(keys);
}

} // namespace

std::vector<Rank> hilbert_order(std::span<const Vec2> frame, const GridDiscretization& disc) {
  return curve_order(frame, disc, hilbert_index);
}

std::vector<Rank> zorder_order(std::span<const Vec2> frame, const GridDiscretization& disc) {
  return curve_order(frame, disc, zorder_index);
}

// ---------------------------------------------------------------------------
// Point quadtree

PointQuadtree::PointQuadtree(std::span<const Vec2> frame) {
  nodes_.reserve(frame.size());
  for (std::size_t e = 0; e < frame.size(); ++e) {
    const Vec2 p = frame[e];
    const auto self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{e});
    if (self == 0) continue;
    std::size_t cur = 0;
    for (;;) {
      const Vec2 s = frame[nodes_[cur].entity];
      const bool north = p.y >= s.y;
      const bool east = p.x >= s.x;
      const int q = north ? (east ? NE : NW) : (east ? SE : SW);
      const std::int32_t next = nodes_[cur].child[q];
      if (next == none) {
        nodes_[cur].child[q] = self;
        break;
      }
      cur = static_cast<std::size_t>(next);
    }
  }
}

std::vector<std::size_t> PointQuadtree::depth_first() const {
  std::vector<std::size_t> out;
  if (nodes_.empty()) return out;
  out.reserve(nodes_.size());
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t cur = stack.back();
    stack.pop_back();
    out.push_back(nodes_[cur].entity);
    for (int q = 3; q >= 0; --q)
      if (nodes_[cur].child[q] != none) stack.push_back(static_cast<std::size_t>(nodes_[cur].child[q]));
  }
  return out;
}

std::vector<Rank> quadtree_order(std::span<const Vec2> frame) {
  const auto seq = PointQuadtree(frame).depth_first();
  return ranks_from_sequence(seq);
}

// ---------------------------------------------------------------------------
// R-tree

namespace {

BoundingBox unite(const BoundingBox& a, const BoundingBox& b) {
  BoundingBox u = a;
  if (!b.empty()) {
    u.extend({b.min_x, b.min_y});
    u.extend({b.max_x, b.max_y});
  }
  return u;
}

// Area first, half-perimeter second: keeps choices meaningful for collinear points.
struct Cost {
  double area = 0.0;
  double margin = 0.0;
  friend auto operator<=>(const Cost&, const Cost&) = default;
};

Cost size_of(const BoundingBox& b) {
  if (b.empty()) return {};
  return {b.width() * b.height(), b.width() + b.height()};
}

Cost enlargement(const BoundingBox& base, const BoundingBox& add) {
  const Cost before = size_of(base);
  const Cost after = size_of(unite(base, add));
  return {after.area - before.area, after.margin - before.margin};
}

} // namespace

RTree::RTree(std::span<const Vec2> frame, std::size_t capacity)
    : pts_(frame), capacity_(capacity), min_fill_(std::max<std::size_t>(1, capacity * 2 / 5)) {
  if (capacity < 2) throw ValidationError("R-tree capacity must be at least 2");
  nodes_.push_back(Node{});
  for (std::size_t e = 0; e < frame.size(); ++e) insert(e);
  pts_ = {};
}

BoundingBox RTree::entry_box(const Node& node, std::size_t entry) const {
  if (node.leaf) {
    BoundingBox b;
    b.extend(pts_[entry]);
    return b;
  }
  return nodes_[entry].mbr;
}

void RTree::insert(std::size_t entity) {
  BoundingBox pbox;
  pbox.extend(pts_[entity]);

  std::vector<std::size_t> path{root_};
  while (!nodes_[path.back()].leaf) {
    const Node& node = nodes_[path.back()];
    std::size_t best = node.entries.front();
    std::pair<Cost, Cost> best_key{enlargement(nodes_[best].mbr, pbox), size_of(nodes_[best].mbr)};
    for (std::size_t c : node.entries) {
      const std::pair<Cost, Cost> key{enlargement(nodes_[c].mbr, pbox), size_of(nodes_[c].mbr)};
      if (key < best_key) {
        best = c;
        best_key = key;
      }
    }
    path.push_back(best);
  }
  for (std::size_t k : path) nodes_[k].mbr.extend(pts_[entity]);
  nodes_[path.back()].entries.push_back(entity);

  // Propagate overflow upwards.
  while (!path.empty() && nodes_[path.back()].entries.size() > capacity_) {
    const std::size_t node = path.back();
    const std::size_t sibling = split(node);
    path.pop_back();
    if (path.empty()) {
      Node new_root;
      new_root.leaf = false;
      new_root.entries = {node, sibling};
      new_root.mbr = unite(nodes_[node].mbr, nodes_[sibling].mbr);
      nodes_.push_back(std::move(new_root));
      root_ = nodes_.size() - 1;
    } else {
      nodes_[path.back()].entries.push_back(sibling);
    }
  }
}

std::size_t RTree::split(std::size_t node_index) {
  const std::vector<std::size_t> entries = nodes_[node_index].entries;
  const bool leaf = nodes_[node_index].leaf;
  std::vector<BoundingBox> boxes;
  boxes.reserve(entries.size());
  for (std::size_t e : entries) boxes.push_back(entry_box(nodes_[node_index], e));

  // PickSeeds: the pair wasting the most area when grouped.
  std::size_t s1 = 0, s2 = 1;
  Cost worst{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t a = 0; a < entries.size(); ++a)
    for (std::size_t b = a + 1; b < entries.size(); ++b) {
      const Cost u = size_of(unite(boxes[a], boxes[b]));
      const Cost ca = size_of(boxes[a]), cb = size_of(boxes[b]);
      const Cost waste{u.area - ca.area - cb.area, u.margin - ca.margin - cb.margin};
      if (waste > worst) {
        worst = waste;
        s1 = a;
        s2 = b;
      }
    }

  std::vector<std::size_t> g1{s1}, g2{s2};
  BoundingBox b1 = boxes[s1], b2 = boxes[s2];
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < entries.size(); ++k)
    if (k != s1 && k != s2) rest.push_back(k);

  while (!rest.empty()) {
    if (g1.size() + rest.size() == min_fill_) {
      for (std::size_t k : rest) {
        g1.push_back(k);
        b1 = unite(b1, boxes[k]);
      }
      break;
    }
    if (g2.size() + rest.size() == min_fill_) {
      for (std::size_t k : rest) {
        g2.push_back(k);
        b2 = unite(b2, boxes[k]);
      }
      break;
    }
    // PickNext: strongest preference for one group.
    std::size_t pick = 0;
    Cost best_diff{-1.0, -1.0};
    for (std::size_t r = 0; r < rest.size(); ++r) {
      const Cost d1 = enlargement(b1, boxes[rest[r]]);
      const Cost d2 = enlargement(b2, boxes[rest[r]]);
      const Cost diff{std::abs(d1.area - d2.area), std::abs(d1.margin - d2.margin)};
      if (diff > best_diff) {
        best_diff = diff;
        pick = r;
      }
    }
    const std::size_t k = rest[pick];
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pick));
    const Cost d1 = enlargement(b1, boxes[k]);
    const Cost d2 = enlargement(b2, boxes[k]);
    bool to_first;
    if (d1 != d2) {
      to_first = d1 < d2;
    } else if (size_of(b1) != size_of(b2)) {
      to_first = size_of(b1) < size_of(b2);
    } else {
      to_first = g1.size() <= g2.size();
    }
    if (to_first) {
      g1.push_back(k);
      b1 = unite(b1, boxes[k]);
    } else {
      g2.push_back(k);
      b2 = unite(b2, boxes[k]);
    }
  }

  auto collect = [&](const std::vector<std::size_t>& g) {
    std::vector<std::size_t> sorted = g;
    std::sort(sorted.begin(), sorted.end()); // keep original storage order within a group
    std::vector<std::size_t> out;
    for (std::size_t k : sorted) out.push_back(entries[k]);
    return out;
  };
  Node sibling;
  sibling.leaf = leaf;
  sibling.entries = collect(g2);
  sibling.mbr = b2;
  nodes_[node_index].entries = collect(g1);
  nodes_[node_index].mbr = b1;
  nodes_.push_back(std::move(sibling));
  return nodes_.size() - 1;
}

std::vector<std::size_t> RTree::depth_first() const {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{root_};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.leaf) {
      out.insert(out.end(), node.entries.begin(), node.entries.end());
      continue;
    }
    std::vector<std::size_t> kids = node.entries;
    std::stable_sort(kids.begin(), kids.end(), [&](std::size_t a, std::size_t b) {
      const Vec2 ca = nodes_[a].mbr.center(), cb = nodes_[b].mbr.center();
      if (ca.x != cb.x) return ca.x < cb.x;
      return ca.y < cb.y;
    });
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<Rank> rtree_order(std::span<const Vec2> frame, std::size_t capacity) {
  return ranks_from_sequence(RTree(frame, capacity).depth_first());
}

// ---------------------------------------------------------------------------
// Dataset drivers

OrderingSummary hilbert_order(const TrajectoryDataset& ds, const GridDiscretization& disc, Exec exec) {
  disc.validate();
  return order_each_frame(ds, exec, "hil:bits=" + std::to_string(disc.bits),
                          [&](std::span<const Vec2> f) { return hilbert_order(f, disc); });
}

OrderingSummary zorder_order(const TrajectoryDataset& ds, const GridDiscretization& disc, Exec exec) {
  disc.validate();
  return order_each_frame(ds, exec, "zor:bits=" + std::to_string(disc.bits),
                          [&](std::span<const Vec2> f) { return zorder_order(f, disc); });
}

OrderingSummary quadtree_order(const TrajectoryDataset& ds, Exec exec) {
  return order_each_frame(ds, exec, "pqr",
                          [](std::span<const Vec2> f) { return quadtree_order(f); });
}

OrderingSummary rtree_order(const TrajectoryDataset& ds, std::size_t capacity, Exec exec) {
  if (capacity < 2) throw ValidationError("R-tree capacity must be at least 2");
  return order_each_frame(ds, exec, "rtr:capacity=" + std::to_string(capacity),
                          [&](std::span<const Vec2> f) { return rtree_order(f, capacity); });
}

} // namespace motionorder
