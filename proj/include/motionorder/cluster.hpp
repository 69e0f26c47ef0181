#pragma once

#include "motionorder/core.hpp"
#include "motionorder/parallel.hpp"

#include <span>
#include <vector>

namespace motionorder {

/// Binary agglomeration tree. Nodes 0..n-1 are the leaves (node i holds entity i);
/// nodes n..2n-2 are merges in the order they happened, the last one being the root.
class ClusterTree {
public:
  struct Node {
    std::size_t left = 0;
    std::size_t right = 0;
    double merge_distance = 0.0;
  };

  ClusterTree() = default;
  explicit ClusterTree(std::size_t num_leaves) : num_leaves_(num_leaves) {}

  std::size_t num_leaves() const noexcept { return num_leaves_; }
  std::size_t num_nodes() const noexcept { return num_leaves_ + merges_.size(); }
  std::size_t root() const noexcept { return num_nodes() - 1; }
  bool is_leaf(std::size_t node) const noexcept { return node < num_leaves_; }

  /// Internal node `node` (node >= num_leaves()).
  const Node& merge(std::size_t node) const { return merges_[node - num_leaves_]; }
  const std::vector<Node>& merges() const noexcept { return merges_; }

  std::size_t add_merge(std::size_t left, std::size_t right, double distance);

  /// Leaves of the subtree in left-to-right (identity) order.
  std::vector<std::size_t> leaves(std::size_t node) const;

  /// Throws ValidationError unless the tree is a complete binary tree over n leaves.
  void validate() const;

private:
  std::size_t num_leaves_ = 0;
  std::vector<Node> merges_;
};

/// Dense symmetric dissimilarity matrix, row-major.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }

  static DistanceMatrix euclidean(std::span<const Vec2> pts);
};

/// Complete-linkage agglomeration on a dissimilarity matrix. Ties between candidate
/// merges go to the pair with the smallest (min entity of A, min entity of B), A < B.
/// When `secondary` is given it breaks exact ties of the primary dissimilarity.
ClusterTree complete_linkage(const DistanceMatrix& primary, const DistanceMatrix* secondary = nullptr);

ClusterTree clc_tree(std::span<const Vec2> frame);

/// k nearest neighbours of every point (self excluded, ties by index). k is clamped to n-1.
std::vector<std::vector<std::size_t>> nearest_neighbors(std::span<const Vec2> frame, std::size_t k);

/// Shared-nearest-neighbour distance 1/(x+1), x = |kNN(p) ∩ kNN(q)|.
DistanceMatrix snn_distances(std::span<const Vec2> frame, std::size_t k);

/// Complete linkage on SNN distance, Euclidean distance breaking SNN ties.
ClusterTree snn_tree(std::span<const Vec2> frame, std::size_t k = 10);

/// Leaf order obtainable by flipping children that minimises the summed Euclidean
/// distance between consecutive leaves (dynamic program over subtree end points).
/// Returns the entity sequence.
std::vector<std::size_t> optimal_leaf_order(const ClusterTree& tree, std::span<const Vec2> frame,
                                            Exec exec = Exec::serial);

/// Sum of consecutive Euclidean distances along a visiting sequence.
double path_length(std::span<const std::size_t> sequence, std::span<const Vec2> frame);

/// Replays merges by ascending distance and stops before the first merge whose distance
/// exceeds factor x the previous merge distance. Parts are sorted by their smallest entity.
std::vector<std::vector<std::size_t>> cut_clusters(const ClusterTree& tree, double factor = 2.0);

OrderingSummary clc_order(const TrajectoryDataset& ds, Exec exec = Exec::parallel);
OrderingSummary snn_order(const TrajectoryDataset& ds, std::size_t k = 10, Exec exec = Exec::parallel);

} // namespace motionorder
