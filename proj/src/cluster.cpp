#include "motionorder/cluster.hpp"

#include "motionorder/spatial.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <tuple>

namespace motionorder {

std::size_t ClusterTree::add_merge(std::size_t left, std::size_t right, double distance) {
  merges_.push_back({left, right, distance});
  return num_nodes() - 1;
}

std::vector<std::size_t> ClusterTree::leaves(std::size_t node) const {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    const std::size_t cur = stack.back();
    stack.pop_back();
    if (is_leaf(cur)) {
      out.push_back(cur);
    } else {
      stack.push_back(merge(cur).right);
      stack.push_back(merge(cur).left);
    }
  }
  return out;
}

void ClusterTree::validate() const {
  if (num_leaves_ == 0) throw ValidationError("cluster tree has no leaves");
  if (merges_.size() + 1 != num_leaves_)
    throw ValidationError("cluster tree must have n-1 internal nodes");
  std::vector<char> used(num_nodes(), 0);
  for (std::size_t k = 0; k < merges_.size(); ++k) {
    const std::size_t self = num_leaves_ + k;
    for (std::size_t c : {merges_[k].left, merges_[k].right}) {
      if (c >= self || used[c]) throw ValidationError("cluster tree child reused or out of order");
      used[c] = 1;
    }
  }
}

DistanceMatrix DistanceMatrix::euclidean(std::span<const Vec2> pts) {
  DistanceMatrix d{pts.size(), std::vector<double>(pts.size() * pts.size(), 0.0)};
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d(i, j) = d(j, i) = distance(pts[i], pts[j]);
  return d;
}

ClusterTree complete_linkage(const DistanceMatrix& primary, const DistanceMatrix* secondary) {
  const std::size_t n = primary.n;
  ClusterTree tree(n);
  if (n <= 1) return tree;

  // Working copies; slot a holds the cluster whose smallest entity is a.
  std::vector<double> P = primary.values;
  std::vector<double> S = secondary ? secondary->values : std::vector<double>(n * n, 0.0);
  auto key = [&](std::size_t a, std::size_t b) { return std::make_tuple(P[a * n + b], S[a * n + b]); };

  std::vector<char> active(n, 1);
  std::vector<std::size_t> node_of(n);
  std::iota(node_of.begin(), node_of.end(), std::size_t{0});
  std::vector<std::size_t> nn(n, 0);

  auto refresh = [&](std::size_t a) {
    std::size_t best = n;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a || !active[b]) continue;
      if (best == n || key(a, b) < key(a, best)) best = b;
    }
    nn[a] = best;
  };
  for (std::size_t a = 0; a < n; ++a) refresh(a);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    auto pair_key = [&](std::size_t x) {
      const std::size_t y = nn[x];
      return std::make_tuple(P[x * n + y], S[x * n + y], std::min(x, y), std::max(x, y));
    };
    for (std::size_t x = 0; x < n; ++x)
      if (active[x] && (a == n || pair_key(x) < pair_key(a))) a = x;
    std::size_t b = nn[a];
    if (b < a) std::swap(a, b);

    tree.add_merge(node_of[a], node_of[b], P[a * n + b]);
    node_of[a] = tree.root();
    active[b] = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == a) continue;
      if (key(b, c) > key(a, c)) {
        P[a * n + c] = P[c * n + a] = P[b * n + c];
        S[a * n + c] = S[c * n + a] = S[b * n + c];
      }
    }
    refresh(a);
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == a) continue;
      if (nn[c] == a || nn[c] == b) {
        refresh(c);
      } else if (std::make_tuple(P[c * n + a], S[c * n + a], a) <
                 std::make_tuple(P[c * n + nn[c]], S[c * n + nn[c]], nn[c])) {
        nn[c] = a;
      }
    }
  }
  return tree;
}

ClusterTree clc_tree(std::span<const Vec2> frame) {
  return complete_linkage(DistanceMatrix::euclidean(frame));
}

std::vector<std::vector<std::size_t>> nearest_neighbors(std::span<const Vec2> frame, std::size_t k) {
  const std::size_t n = frame.size();
  k = std::min(k, n == 0 ? 0 : n - 1);
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand.emplace_back(squared_distance(frame[i], frame[j]), j);
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    out[i].reserve(k);
    for (std::size_t q = 0; q < k; ++q) out[i].push_back(cand[q].second);
  }
  return out;
}

DistanceMatrix snn_distances(std::span<const Vec2> frame, std::size_t k) {
  const std::size_t n = frame.size();
  auto knn = nearest_neighbors(frame, k);
  for (auto& row : knn) std::sort(row.begin(), row.end());
  DistanceMatrix d{n, std::vector<double>(n * n, 0.0)};
  std::vector<std::size_t> common;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      common.clear();
      std::set_intersection(knn[i].begin(), knn[i].end(), knn[j].begin(), knn[j].end(),
                            std::back_inserter(common));
      d(i, j) = d(j, i) = 1.0 / (static_cast<double>(common.size()) + 1.0);
    }
  return d;
}

ClusterTree snn_tree(std::span<const Vec2> frame, std::size_t k) {
  if (k < 1) throw ValidationError("SNN neighbourhood size must be at least 1");
  const DistanceMatrix snn = snn_distances(frame, k);
  const DistanceMatrix eucl = DistanceMatrix::euclidean(frame);
  return complete_linkage(snn, &eucl);
}

std::vector<std::size_t> optimal_leaf_order(const ClusterTree& tree, std::span<const Vec2> frame,
                                            Exec exec) {
  const std::size_t n = tree.num_leaves();
  if (frame.size() != n) throw ValidationError("tree leaves do not match frame size");
  if (n == 1) return {0};

  // cost[i*n+j]: shortest path over the leaves of LCA(i,j) starting at i, ending at j.
  // For that path, left_end[i*n+j] is the last leaf of the half containing i and
  // right_start[i*n+j] the first leaf of the half containing j.
  std::vector<double> cost(n * n, 0.0);
  std::vector<std::uint32_t> left_end(n * n, 0), right_start(n * n, 0);
  auto dist = [&](std::size_t a, std::size_t b) { return distance(frame[a], frame[b]); };

  // Leaves a path through `side` may end at when it starts at i: the opposite child of
  // `side`, or i itself when `side` is a leaf.
  struct Halves {
    std::vector<std::size_t> all, first, second;
    std::vector<char> in_first;
  };
  auto halves = [&](std::size_t side) {
    Halves h;
    h.all = tree.leaves(side);
    h.in_first.assign(n, 0);
    if (!tree.is_leaf(side)) {
      h.first = tree.leaves(tree.merge(side).left);
      h.second = tree.leaves(tree.merge(side).right);
      for (std::size_t leaf : h.first) h.in_first[leaf] = 1;
    }
    return h;
  };
  auto far_side = [](const Halves& h, std::size_t i) -> const std::vector<std::size_t>* {
    if (h.first.empty()) return nullptr;
    return h.in_first[i] ? &h.second : &h.first;
  };

  for (std::size_t node = n; node < tree.num_nodes(); ++node) {
    const Halves L = halves(tree.merge(node).left);
    const Halves R = halves(tree.merge(node).right);

    auto solve = [&](const Halves& A, const Halves& B) {
      parallel_for(exec, A.all.size(), [&](std::size_t ia) {
        const std::size_t i = A.all[ia];
        const std::vector<std::size_t> self{i};
        const std::vector<std::size_t>& ends = far_side(A, i) ? *far_side(A, i) : self;
        // via[m]: best path from i through all of A, then a hop to m in B.
        std::vector<double> via(B.all.size());
        std::vector<std::size_t> via_k(B.all.size());
        for (std::size_t mb = 0; mb < B.all.size(); ++mb) {
          const std::size_t m = B.all[mb];
          double best = std::numeric_limits<double>::infinity();
          std::size_t arg = i;
          for (std::size_t k : ends) {
            const double c = (k == i ? 0.0 : cost[i * n + k]) + dist(k, m);
            if (c < best) {
              best = c;
              arg = k;
            }
          }
          via[mb] = best;
          via_k[mb] = arg;
        }
        for (std::size_t j : B.all) {
          double best = std::numeric_limits<double>::infinity();
          std::size_t arg = 0;
          for (std::size_t mb = 0; mb < B.all.size(); ++mb) {
            const std::size_t m = B.all[mb];
            // m must start a full path through B that ends at j.
            if (B.first.empty() ? m != j : B.in_first[m] == B.in_first[j]) continue;
            const double c = via[mb] + (m == j ? 0.0 : cost[m * n + j]);
            if (c < best) {
              best = c;
              arg = mb;
            }
          }
          cost[i * n + j] = best;
          left_end[i * n + j] = static_cast<std::uint32_t>(via_k[arg]);
          right_start[i * n + j] = static_cast<std::uint32_t>(B.all[arg]);
        }
      });
    };
    // Paths run left-to-right from A into B; both orientations are needed.
    solve(L, R);
    solve(R, L);
  }

  const std::size_t root = tree.root();
  std::vector<char> in_left(n, 0);
  for (std::size_t leaf : tree.leaves(tree.merge(root).left)) in_left[leaf] = 1;
  std::size_t bi = n, bj = n;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (in_left[i] == in_left[j]) continue;
      if (cost[i * n + j] < best) {
        best = cost[i * n + j];
        bi = i;
        bj = j;
      }
    }

  std::vector<std::size_t> seq;
  seq.reserve(n);
  std::vector<std::pair<std::size_t, std::size_t>> stack{{bi, bj}};
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    if (i == j) {
      seq.push_back(i);
      continue;
    }
    stack.emplace_back(right_start[i * n + j], j);
    stack.emplace_back(i, left_end[i * n + j]);
  }
  return seq;
}

double path_length(std::span<const std::size_t> sequence, std::span<const Vec2> frame) {
  double len = 0.0;
  for (std::size_t k = 1; k < sequence.size(); ++k)
    len += distance(frame[sequence[k - 1]], frame[sequence[k]]);
  return len;
}

std::vector<std::vector<std::size_t>> cut_clusters(const ClusterTree& tree, double factor) {
  const std::size_t n = tree.num_leaves();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  // Any leaf identifies a subtree for union-find purposes.
  std::vector<std::size_t> rep(tree.num_nodes());
  for (std::size_t v = 0; v < tree.num_nodes(); ++v)
    rep[v] = tree.is_leaf(v) ? v : rep[tree.merge(v).left];

  std::vector<std::size_t> order(tree.merges().size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tree.merges()[a].merge_distance < tree.merges()[b].merge_distance;
  });

  bool first = true;
  double previous = 0.0;
  for (std::size_t q : order) {
    const auto& m = tree.merges()[q];
    if (!first && m.merge_distance > factor * previous) break;
    const std::size_t a = find(rep[m.left]), b = find(rep[m.right]);
    parent[std::max(a, b)] = std::min(a, b);
    previous = m.merge_distance;
    first = false;
  }

  std::vector<std::vector<std::size_t>> parts;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] == n) {
      slot[r] = parts.size();
      parts.emplace_back();
    }
    parts[slot[r]].push_back(i);
  }
  return parts;
}

OrderingSummary clc_order(const TrajectoryDataset& ds, Exec exec) {
  return order_each_frame(ds, exec, "clc", [](std::span<const Vec2> f) {
    return ranks_from_sequence(optimal_leaf_order(clc_tree(f), f));
  });
}

OrderingSummary snn_order(const TrajectoryDataset& ds, std::size_t k, Exec exec) {
  if (k < 1) throw ValidationError("SNN neighbourhood size must be at least 1");
  return order_each_frame(ds, exec, "snn:k=" + std::to_string(k), [k](std::span<const Vec2> f) {
    return ranks_from_sequence(optimal_leaf_order(snn_tree(f, k), f));
  });
}

} // namespace motionorder
