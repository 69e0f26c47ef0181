#include "doctest.h"
#include "helpers.hpp"

#include "motionorder/cluster.hpp"

#include <limits>

using namespace motionorder;

namespace {

ClusterTree random_tree(std::mt19937_64& rng, std::size_t n) {
  ClusterTree tree(n);
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;
  double d = 0.0;
  while (active.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    d += 1.0;
    const std::size_t node = tree.add_merge(active[a], active[b], d);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(std::max(a, b)));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(std::min(a, b)));
    active.push_back(node);
  }
  return tree;
}

// Leaf order under a flip mask indexed by merge number.
void leaves_with_flips(const ClusterTree& t, std::size_t node, unsigned mask, std::vector<std::size_t>& out) {
  if (t.is_leaf(node)) {
    out.push_back(node);
    return;
  }
  const auto& m = t.merge(node);
  const bool flip = (mask >> (node - t.num_leaves())) & 1u;
  leaves_with_flips(t, flip ? m.right : m.left, mask, out);
  leaves_with_flips(t, flip ? m.left : m.right, mask, out);
}

double brute_force_olo(const ClusterTree& t, std::span<const Vec2> pts) {
  double best = std::numeric_limits<double>::infinity();
  const unsigned masks = 1u << t.merges().size();
  for (unsigned mask = 0; mask < masks; ++mask) {
    std::vector<std::size_t> seq;
    leaves_with_flips(t, t.root(), mask, seq);
    best = std::min(best, path_length(seq, pts));
  }
  return best;
}

ClusterTree tree_with_distances(const std::vector<double>& d) {
  // Caterpillar over n = d.size()+1 leaves: ((0,1),2),3)...
  ClusterTree t(d.size() + 1);
  std::size_t cur = t.add_merge(0, 1, d[0]);
  for (std::size_t i = 1; i < d.size(); ++i) cur = t.add_merge(cur, i + 1, d[i]);
  return t;
}

} // namespace

TEST_SUITE("cluster") {

TEST_CASE("complete linkage on a line") {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {10, 0}};
  const auto tree = clc_tree(pts);
  REQUIRE(tree.merges().size() == 2);
  CHECK(tree.merges()[0].merge_distance == 1.0);
  CHECK(tree.leaves(3) == std::vector<std::size_t>{0, 1});
  CHECK(tree.merges()[1].merge_distance == 10.0);
  tree.validate();
}

TEST_CASE("single point gives a single-leaf tree") {
  const std::vector<Vec2> pts{{2, 2}};
  const auto tree = clc_tree(pts);
  CHECK(tree.num_nodes() == 1);
  CHECK(optimal_leaf_order(tree, pts) == std::vector<std::size_t>{0});
  CHECK(cut_clusters(tree).size() == 1);
}

TEST_CASE("merge distances never decrease") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pts = testing::random_frame(rng, 8 + trial);
    const auto tree = clc_tree(pts);
    tree.validate();
    for (std::size_t m = 1; m < tree.merges().size(); ++m)
      CHECK(tree.merges()[m].merge_distance >= tree.merges()[m - 1].merge_distance);
  }
}

TEST_CASE("complete linkage distance is the farthest pair") {
  std::mt19937_64 rng(12);
  const auto pts = testing::random_frame(rng, 12);
  const auto tree = clc_tree(pts);
  for (std::size_t node = tree.num_leaves(); node < tree.num_nodes(); ++node) {
    const auto& m = tree.merge(node);
    double far = 0.0;
    for (auto a : tree.leaves(m.left))
      for (auto b : tree.leaves(m.right)) far = std::max(far, distance(pts[a], pts[b]));
    CHECK(m.merge_distance == doctest::Approx(far).epsilon(1e-12));
  }
}

TEST_CASE("shared nearest neighbour distances") {
  // 0 and 1 share both of their 2 nearest neighbours (2 and 3)
  const std::vector<Vec2> tight{{0, 0}, {0.1, 0}, {0.05, 0.05}, {0.05, -0.05}, {100, 100}, {101, 100}, {100, 101}};
  const auto d = snn_distances(tight, 2);
  CHECK(d(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(d(0, 4) == 1.0);
  CHECK(d(1, 0) == d(0, 1));
}

TEST_CASE("snn tree builds on a larger frame") {
  std::mt19937_64 rng(13);
  const auto pts = testing::random_frame(rng, 151);
  const auto tree = snn_tree(pts, 10);
  tree.validate();
  CHECK(tree.leaves(tree.root()).size() == 151);
}

TEST_CASE("optimal leaf order on two pairs") {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {10, 0}, {11, 0}};
  ClusterTree t(4);
  const auto ab = t.add_merge(0, 1, 1);
  const auto cd = t.add_merge(2, 3, 1);
  t.add_merge(ab, cd, 11);
  const auto seq = optimal_leaf_order(t, pts);
  CHECK(path_length(seq, pts) == 11.0);
  CHECK(((seq == std::vector<std::size_t>{0, 1, 2, 3}) || (seq == std::vector<std::size_t>{3, 2, 1, 0})));
}

TEST_CASE("optimal leaf order equals exhaustive flip search") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    const auto pts = testing::random_frame(rng, n);
    const auto tree = random_tree(rng, n);
    const auto seq = optimal_leaf_order(tree, pts);
    CHECK(path_length(seq, pts) == doctest::Approx(brute_force_olo(tree, pts)).epsilon(1e-12));
  }
}

TEST_CASE("doubling cut") {
  CHECK(cut_clusters(tree_with_distances({1.0, 1.2, 5.0}), 2.0).size() == 2);
  CHECK(cut_clusters(tree_with_distances({1.0, 1.5, 2.9}), 2.0).size() == 1);
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {10, 0}};
  const auto parts = cut_clusters(clc_tree(pts), 2.0);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0] == std::vector<std::size_t>{0, 1});
  CHECK(parts[1] == std::vector<std::size_t>{2});
}

TEST_CASE("cut yields a partition") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = testing::random_frame(rng, 30);
    const auto parts = cut_clusters(clc_tree(pts), 1.5);
    std::vector<int> count(30, 0);
    for (const auto& p : parts)
      for (auto e : p) ++count[e];
    for (int c : count) CHECK(c == 1);
    for (std::size_t i = 1; i < parts.size(); ++i) CHECK(parts[i - 1].front() < parts[i].front());
  }
}

TEST_CASE("cluster orderings are exec-independent permutations") {
  const auto ds = testing::random_dataset(21, 40, 6);
  const auto a = clc_order(ds, Exec::serial), b = clc_order(ds, Exec::parallel);
  CHECK(a.all_ranks() == b.all_ranks());
  CHECK(snn_order(ds, 10, Exec::serial).all_ranks() == snn_order(ds, 10, Exec::parallel).all_ranks());
}

} // TEST_SUITE
