#pragma once

#include "motionorder/core.hpp"
#include "motionorder/parallel.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace motionorder {

/// Quantization grid of 2^bits x 2^bits cells. Without an explicit box each frame is
/// quantized against its own bounding box.
struct GridDiscretization {
  int bits = 16;
  std::optional<BoundingBox> box;

  void validate() const;
};

struct Cell {
  std::uint32_t x = 0;
  std::uint32_t y = 0; // y grows northwards
};

/// Clamps p into box and maps it to a cell. A zero-extent axis maps to cell 0.
Cell quantize(Vec2 p, const BoundingBox& box, int bits);

/// Hilbert index; the order-1 curve visits SW, NW, NE, SE.
std::uint64_t hilbert_index(Cell c, int bits);
Cell hilbert_cell(std::uint64_t index, int bits);

/// Morton index with the row bit (north first) above the column bit, giving NW, NE, SW, SE.
std::uint64_t zorder_index(Cell c, int bits);

std::vector<Rank> hilbert_order(std::span<const Vec2> frame, const GridDiscretization& disc = {});
std::vector<Rank> zorder_order(std::span<const Vec2> frame, const GridDiscretization& disc = {});

/// Point quadtree built by inserting points in entity order. Each node splits at its
/// point; a point goes north if y >= split.y and east if x >= split.x.
class PointQuadtree {
public:
  enum Quadrant { NW = 0, NE = 1, SW = 2, SE = 3 };
  static constexpr std::int32_t none = -1;

  struct Node {
    std::size_t entity;
    std::array<std::int32_t, 4> child{none, none, none, none};
  };

  explicit PointQuadtree(std::span<const Vec2> frame);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  /// Preorder traversal: node, then NW, NE, SW, SE subtrees.
  std::vector<std::size_t> depth_first() const;

private:
  std::vector<Node> nodes_;
};

std::vector<Rank> quadtree_order(std::span<const Vec2> frame);

/// Guttman R-tree with quadratic split, built by inserting points in entity order.
class RTree {
public:
  struct Node {
    bool leaf = true;
    BoundingBox mbr;
    std::vector<std::size_t> entries; // entity indices (leaf) or node indices (internal)
  };

  RTree(std::span<const Vec2> frame, std::size_t capacity);

  std::size_t root() const noexcept { return root_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t min_fill() const noexcept { return min_fill_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  /// Leaf entries in stored order; internal children by ascending MBR centre x, then y.
  std::vector<std::size_t> depth_first() const;

private:
  void insert(std::size_t entity);
  std::size_t split(std::size_t node_index);
  BoundingBox entry_box(const Node& node, std::size_t entry) const;

  std::span<const Vec2> pts_;
  std::size_t capacity_;
  std::size_t min_fill_;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

std::vector<Rank> rtree_order(std::span<const Vec2> frame, std::size_t capacity = 8);

/// Per-frame orderings over a whole dataset; frames are independent.
OrderingSummary hilbert_order(const TrajectoryDataset& ds, const GridDiscretization& disc,
                              Exec exec = Exec::parallel);
OrderingSummary zorder_order(const TrajectoryDataset& ds, const GridDiscretization& disc,
                             Exec exec = Exec::parallel);
OrderingSummary quadtree_order(const TrajectoryDataset& ds, Exec exec = Exec::parallel);
OrderingSummary rtree_order(const TrajectoryDataset& ds, std::size_t capacity,
                            Exec exec = Exec::parallel);

/// Runs a per-frame ranking function over every frame and assembles the summary.
template <typename FrameRanker>
OrderingSummary order_each_frame(const TrajectoryDataset& ds, Exec exec, std::string tag,
                                 FrameRanker&& rank_frame) {
  const std::size_t n = ds.num_entities();
  std::vector<Rank> ranks(ds.num_frames() * n);
  parallel_for(exec, ds.num_frames(), [&](std::size_t t) {
    const std::vector<Rank> r = rank_frame(ds.frame(t));
    std::copy(r.begin(), r.end(), ranks.begin() + static_cast<std::ptrdiff_t>(t * n));
  });
  return {ds.num_frames(), n, std::move(ranks), std::move(tag)};
}

} // namespace motionorder
