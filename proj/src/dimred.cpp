#include "motionorder/dimred.hpp"

#include "motionorder/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

namespace motionorder {

namespace {

template <typename PointAt>
PrincipalAxis principal_axis(std::size_t count, PointAt&& point_at) {
  PrincipalAxis out;
  if (count == 0) return out;
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    mx += point_at(k).x;
    my += point_at(k).y;
  }
  const double inv = 1.0 / static_cast<double>(count);
  mx *= inv;
  my *= inv;
  double cxx = 0.0, cxy = 0.0, cyy = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double dx = point_at(k).x - mx, dy = point_at(k).y - my;
    cxx += dx * dx;
    cxy += dx * dy;
    cyy += dy * dy;
  }
  cxx *= inv;
  cxy *= inv;
  cyy *= inv;

  const double half_trace = 0.5 * (cxx + cyy);
  const double radius = std::hypot(0.5 * (cxx - cyy), cxy);
  out.v1 = half_trace + radius;
  out.v2 = std::max(0.0, half_trace - radius);
  out.isotropic = radius == 0.0;
  if (!out.isotropic) {
    const double theta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    out.direction = {std::cos(theta), std::sin(theta)};
  }
  return out;
}

// First principal component made consistent with `reference`; an isotropic frame
// inherits the reference direction.
Vec2 consistent_direction(const PrincipalAxis& axis, Vec2 reference) {
  if (axis.isotropic) return reference;
  Vec2 d = axis.direction;
  if (dot(d, reference) < 0.0) d = -1.0 * d;
  return d;
}

bool stretched(const PrincipalAxis& axis, double sigma) { return axis.stretch_ratio() <= sigma; }

} // namespace

PrincipalAxis pca_frame(std::span<const Vec2> frame) {
  return principal_axis(frame.size(), [&](std::size_t k) { return frame[k]; });
}

PrincipalAxis pca_subset(std::span<const Vec2> frame, std::span<const std::size_t> members) {
  return principal_axis(members.size(), [&](std::size_t k) { return frame[members[k]]; });
}

void SpcConfig::validate() const {
  if (!(sigma >= 0.0 && sigma <= 1.0))
    throw ValidationError("sigma must lie in [0,1], got " + std::to_string(sigma));
}

ProjectionTimeline spc_timeline(const TrajectoryDataset& ds, const SpcConfig& cfg) {
  cfg.validate();
  const std::size_t T = ds.num_frames();
  ProjectionTimeline tl;
  tl.pv.resize(T);
  tl.v1.resize(T);
  tl.v2.resize(T);
  tl.interpolated.assign(T, 0);

  const PrincipalAxis first = pca_frame(ds.frame(0));
  tl.pv[0] = first.direction;
  tl.v1[0] = first.v1;
  tl.v2[0] = first.v2;

  std::size_t anchor = 0;
  double alpha = 0.0;
  Vec2 previous = tl.pv[0]; // sign-consistent first PC of the previous frame
  for (std::size_t t = 1; t < T; ++t) {
    const PrincipalAxis axis = pca_frame(ds.frame(t));
    const Vec2 pc = consistent_direction(axis, previous);
    tl.v1[t] = axis.v1;
    tl.v2[t] = axis.v2;
    tl.pv[t] = pc;
    alpha += signed_angle(previous, pc);
    previous = pc;
    if (stretched(axis, cfg.sigma) || t == T - 1) {
      const double span = static_cast<double>(t - anchor);
      for (std::size_t s = anchor + 1; s < t; ++s) {
        tl.pv[s] = rotate(tl.pv[anchor], alpha * static_cast<double>(s - anchor) / span);
        tl.interpolated[s] = 1;
      }
      anchor = t;
      alpha = 0.0;
    }
  }
  return tl;
}

OrderingSummary project_order(const TrajectoryDataset& ds, const ProjectionTimeline& tl, Exec exec) {
  const std::size_t T = ds.num_frames(), n = ds.num_entities();
  if (tl.pv.size() != T) throw ValidationError("projection timeline length does not match dataset");
  std::vector<double> coords(T * n);
  parallel_for(exec, T, [&](std::size_t t) {
    const auto pts = ds.frame(t);
    for (std::size_t i = 0; i < n; ++i) coords[t * n + i] = dot(pts[i], tl.pv[t]);
  });
  return OrderingSummary::from_coords(T, n, std::move(coords), "projection");
}

OrderingSummary spc_order(const TrajectoryDataset& ds, const SpcConfig& cfg, Exec exec) {
  auto ord = project_order(ds, spc_timeline(ds, cfg), exec);
  char tag[48];
  std::snprintf(tag, sizeof tag, "spc:sigma=%.6g", cfg.sigma);
  ord.set_method_tag(tag);
  return ord;
}

OrderingSummary pca_order(const TrajectoryDataset& ds) {
  const std::size_t T = ds.num_frames(), n = ds.num_entities();
  std::vector<double> coords(T * n);
  Vec2 previous{1.0, 0.0};
  for (std::size_t t = 0; t < T; ++t) {
    const PrincipalAxis axis = pca_frame(ds.frame(t));
    Vec2 pc = axis.isotropic ? previous : axis.direction;
    if (t > 0 && dot(pc, previous) < 0.0) pc = -1.0 * pc;
    previous = pc;
    const auto pts = ds.frame(t);
    for (std::size_t i = 0; i < n; ++i) coords[t * n + i] = dot(pts[i], pc);
  }
  return OrderingSummary::from_coords(T, n, std::move(coords), "pca");
}

// ---------------------------------------------------------------------------
// Clustered principal component

namespace {

// SPC state of one cluster over the frames during which its member set is unchanged.
struct Track {
  std::size_t anchor = 0;
  Vec2 anchor_pv;
  Vec2 previous;
  double alpha = 0.0;
  std::vector<std::size_t> pending_slots; // part indices of frames anchor+1.. awaiting back-fill
};

void close_window(Track& tr, std::size_t t, std::vector<std::vector<Vec2>>& cluster_pv) {
  const double span = static_cast<double>(t - tr.anchor);
  for (std::size_t s = tr.anchor + 1; s < t; ++s) {
    const std::size_t slot = tr.pending_slots[s - tr.anchor - 1];
    cluster_pv[s][slot] = rotate(tr.anchor_pv, tr.alpha * static_cast<double>(s - tr.anchor) / span);
  }
  tr.pending_slots.clear();
  tr.anchor = t;
  tr.anchor_pv = tr.previous;
  tr.alpha = 0.0;
}

} // namespace

CpcResult cpc_run(const TrajectoryDataset& ds, const CpcConfig& cfg, Exec exec) {
  cfg.spc.validate();
  if (!(cfg.cut_factor > 0.0)) throw ValidationError("cut factor must be positive");
  const std::size_t T = ds.num_frames(), n = ds.num_entities();

  CpcResult res;
  res.partitions.resize(T);
  parallel_for(exec, T, [&](std::size_t t) {
    res.partitions[t] = cut_clusters(clc_tree(ds.frame(t)), cfg.cut_factor);
  });
  res.cluster_pv.resize(T);

  // Sequential per-cluster SPC over time.
  std::map<std::vector<std::size_t>, Track> live;
  std::vector<std::size_t> prev_part_of(n, 0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& parts = res.partitions[t];
    const auto frame = ds.frame(t);
    res.cluster_pv[t].resize(parts.size());

    // Tracks whose member set no longer exists end at t-1.
    std::map<std::vector<std::size_t>, Track> next_live;
    for (const auto& part : parts) {
      auto it = live.find(part);
      if (it != live.end()) {
        next_live.emplace(part, std::move(it->second));
        live.erase(it);
      }
    }
    for (auto& [members, tr] : live) close_window(tr, t - 1, res.cluster_pv);

    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto& part = parts[k];
      const PrincipalAxis axis = pca_subset(frame, part);
      auto it = next_live.find(part);
      if (it != next_live.end()) {
        Track& tr = it->second;
        const Vec2 pc = consistent_direction(axis, tr.previous);
        tr.alpha += signed_angle(tr.previous, pc);
        tr.previous = pc;
        res.cluster_pv[t][k] = pc;
        if (stretched(axis, cfg.spc.sigma) || t == T - 1) {
          close_window(tr, t, res.cluster_pv);
        } else {
          tr.pending_slots.push_back(k);
        }
        continue;
      }
      // New member set: orient by the projection vector most of its members used at t-1.
      Vec2 pc = axis.direction;
      if (t > 0) {
        std::map<std::size_t, std::size_t> votes;
        for (std::size_t e : part) ++votes[prev_part_of[e]];
        std::size_t best_part = votes.begin()->first, best_count = 0;
        for (const auto& [p, c] : votes)
          if (c > best_count) {
            best_part = p;
            best_count = c;
          }
        pc = consistent_direction(axis, res.cluster_pv[t - 1][best_part]);
      }
      Track tr;
      tr.anchor = t;
      tr.anchor_pv = pc;
      tr.previous = pc;
      res.cluster_pv[t][k] = pc;
      next_live.emplace(part, std::move(tr));
    }
    live = std::move(next_live);
    for (std::size_t k = 0; k < parts.size(); ++k)
      for (std::size_t e : parts[k]) prev_part_of[e] = k;
  }

  // Whole-set first principal component orders the cluster centroids.
  std::vector<Vec2> whole(T);
  Vec2 previous{1.0, 0.0};
  for (std::size_t t = 0; t < T; ++t) {
    const PrincipalAxis axis = pca_frame(ds.frame(t));
    Vec2 pc = axis.isotropic ? previous : axis.direction;
    if (t > 0 && dot(pc, previous) < 0.0) pc = -1.0 * pc;
    whole[t] = previous = pc;
  }

  std::vector<Rank> ranks(T * n);
  std::vector<double> coords(T * n);
  parallel_for(exec, T, [&](std::size_t t) {
    const auto frame = ds.frame(t);
    const auto& parts = res.partitions[t];
    const std::size_t m = parts.size();
    std::vector<Vec2> centroid(m);
    std::vector<double> center(m);
    for (std::size_t k = 0; k < m; ++k) {
      Vec2 c{};
      for (std::size_t e : parts[k]) c = c + frame[e];
      centroid[k] = (1.0 / static_cast<double>(parts[k].size())) * c;
      center[k] = dot(centroid[k], whole[t]);
    }
    std::vector<std::size_t> cluster_order(m);
    std::iota(cluster_order.begin(), cluster_order.end(), std::size_t{0});
    std::stable_sort(cluster_order.begin(), cluster_order.end(),
                     [&](std::size_t a, std::size_t b) { return center[a] < center[b]; });

    // Within-cluster projections; track the widest internal gap to size band spacing.
    std::vector<std::vector<std::pair<double, std::size_t>>> members(m);
    double widest_gap = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t e : parts[k]) members[k].emplace_back(dot(frame[e], res.cluster_pv[t][k]), e);
      std::sort(members[k].begin(), members[k].end());
      for (std::size_t q = 1; q < members[k].size(); ++q)
        widest_gap = std::max(widest_gap, members[k][q].first - members[k][q - 1].first);
    }
    const double band_gap = widest_gap > 0.0 ? 2.0 * widest_gap : 1.0;

    Rank r = 0;
    bool have_prev = false;
    double prev_coord = 0.0;
    std::size_t prev_entity = 0;
    double band_end = 0.0;
    for (std::size_t k : cluster_order) {
      const auto& mem = members[k];
      const double own_center = dot(centroid[k], res.cluster_pv[t][k]);
      double shift = center[k] - own_center;
      if (have_prev && mem.front().first + shift < band_end + band_gap)
        shift = band_end + band_gap - mem.front().first;
      for (const auto& [key, e] : mem) {
        double c = key + shift;
        if (have_prev && (c < prev_coord || (c == prev_coord && e < prev_entity)))
          c = std::nextafter(prev_coord, std::numeric_limits<double>::infinity());
        ranks[t * n + e] = r++;
        coords[t * n + e] = c;
        prev_coord = c;
        prev_entity = e;
        have_prev = true;
      }
      band_end = prev_coord;
    }
  });

  char tag[64];
  std::snprintf(tag, sizeof tag, "cpc:sigma=%.6g:cut=%.6g", cfg.spc.sigma, cfg.cut_factor);
  res.ordering = OrderingSummary(T, n, std::move(ranks), tag);
  res.ordering.attach_coords(std::move(coords));
  return res;
}

OrderingSummary cpc_order(const TrajectoryDataset& ds, const CpcConfig& cfg, Exec exec) {
  return cpc_run(ds, cfg, exec).ordering;
}

} // namespace motionorder
