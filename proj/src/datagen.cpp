#include "motionorder/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>

namespace motionorder {

void BoidsConfig::validate() const {
  if (clusters < 1 || boids_per_cluster < 1 || frames < 1)
    throw ValidationError("clusters, boids_per_cluster and frames must be at least 1");
  if (!(arena.width() > 0.0) || !(arena.height() > 0.0) || !std::isfinite(arena.diagonal()))
    throw ValidationError("arena must have positive, finite area");
  const double positive[] = {separation_radius, alignment_radius, cohesion_radius, repulsion_radius,
                             max_speed, max_force, spawn_radius, vision};
  for (double v : positive)
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("radii, speeds and forces must be positive");
  const double nonnegative[] = {separation_weight, alignment_weight, cohesion_weight, repulsion_weight,
                                wander_weight, minimum_separation, max_separate_turn, max_align_turn,
                                max_cohere_turn};
  for (double v : nonnegative)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("weights and turn limits must be non-negative");
}

void BoidsConfig::set(const std::string& key, const std::string& value, std::size_t line) {
  const std::map<std::string, double*> reals = {
      {"arena_min_x", &arena.min_x},
      {"arena_min_y", &arena.min_y},
      {"arena_max_x", &arena.max_x},
      {"arena_max_y", &arena.max_y},
      {"separation_radius", &separation_radius},
      {"alignment_radius", &alignment_radius},
      {"cohesion_radius", &cohesion_radius},
      {"repulsion_radius", &repulsion_radius},
      {"separation_weight", &separation_weight},
      {"alignment_weight", &alignment_weight},
      {"cohesion_weight", &cohesion_weight},
      {"repulsion_weight", &repulsion_weight},
      {"wander_weight", &wander_weight},
      {"max_speed", &max_speed},
      {"max_force", &max_force},
      {"spawn_radius", &spawn_radius},
      {"vision", &vision},
      {"minimum_separation", &minimum_separation},
      {"max_separate_turn", &max_separate_turn},
      {"max_align_turn", &max_align_turn},
      {"max_cohere_turn", &max_cohere_turn},
  };
  const std::map<std::string, std::size_t*> counts = {
      {"clusters", &clusters}, {"boids_per_cluster", &boids_per_cluster}, {"frames", &frames}, {"warmup", &warmup}};
  if (auto it = reals.find(key); it != reals.end()) {
    *it->second = parse_double(value, key, line);
  } else if (auto ct = counts.find(key); ct != counts.end()) {
    const auto v = parse_int(value, key, line);
    if (v < 0) throw ValidationError(key + " must be non-negative");
    *ct->second = static_cast<std::size_t>(v);
  } else if (key == "seed") {
    seed = parse_uint(value, key, line);
  } else {
    const std::string msg = "unknown generator setting '" + key + "'";
    if (line > 0) throw ParseError(msg, static_cast<long>(line));
    throw ValidationError(msg);
  }
}

void BoidsConfig::apply(const KeyValueFile& kv) {
  for (const auto& e : kv.entries) set(e.key, e.value, e.line);
}

namespace {

Vec2 limit(Vec2 v, double max_len) {
  const double len = norm(v);
  return len > max_len ? v * (max_len / len) : v;
}

Vec2 unit(Vec2 v) {
  const double len = norm(v);
  return len > 0.0 ? v * (1.0 / len) : Vec2{0.0, 0.0};
}

// Mirrors a position that left the arena back inside and flips the matching velocity component.
void reflect(Vec2& p, Vec2& v, const BoundingBox& box) {
  if (p.x < box.min_x) {
    p.x = std::min(box.max_x, 2.0 * box.min_x - p.x);
    v.x = std::abs(v.x);
  } else if (p.x > box.max_x) {
    p.x = std::max(box.min_x, 2.0 * box.max_x - p.x);
    v.x = -std::abs(v.x);
  }
  if (p.y < box.min_y) {
    p.y = std::min(box.max_y, 2.0 * box.min_y - p.y);
    v.y = std::abs(v.y);
  } else if (p.y > box.max_y) {
    p.y = std::max(box.min_y, 2.0 * box.max_y - p.y);
    v.y = -std::abs(v.y);
  }
}

std::vector<std::string> boid_ids(std::size_t clusters, std::size_t per_cluster) {
  std::vector<std::string> ids;
  const int width = per_cluster > 1 ? static_cast<int>(std::to_string(per_cluster - 1).size()) : 1;
  char buf[64];
  for (std::size_t c = 0; c < clusters; ++c)
    for (std::size_t b = 0; b < per_cluster; ++b) {
      if (clusters > 1)
        std::snprintf(buf, sizeof buf, "c%zu_%0*zu", c, width, b);
      else
        std::snprintf(buf, sizeof buf, "b%0*zu", width, b);
      ids.emplace_back(buf);
    }
  return ids;
}

} // namespace

TrajectoryDataset gen_reynolds_clusters(const BoidsConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.clusters * cfg.boids_per_cluster;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit_interval(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<Vec2> pos(n), vel(n);
  std::vector<std::size_t> cluster(n);
  // Cluster centres evenly spaced on a circle around the arena centre.
  const Vec2 centre = cfg.arena.center();
  const double ring = 0.3 * std::min(cfg.arena.width(), cfg.arena.height());
  const double phase = two_pi * unit_interval(rng);
  for (std::size_t c = 0; c < cfg.clusters; ++c) {
    const double a = phase + two_pi * static_cast<double>(c) / static_cast<double>(cfg.clusters);
    const Vec2 home = cfg.clusters > 1 ? centre + Vec2{std::cos(a), std::sin(a)} * ring : centre;
    const double heading = two_pi * unit_interval(rng);
    for (std::size_t b = 0; b < cfg.boids_per_cluster; ++b) {
      const std::size_t i = c * cfg.boids_per_cluster + b;
      const double r = cfg.spawn_radius * std::sqrt(unit_interval(rng));
      const double t = two_pi * unit_interval(rng);
      pos[i] = home + Vec2{std::cos(t), std::sin(t)} * r;
      const double h = heading + 0.3 * (unit_interval(rng) - 0.5);
      vel[i] = Vec2{std::cos(h), std::sin(h)} * (cfg.max_speed * (0.5 + 0.5 * unit_interval(rng)));
      cluster[i] = c;
      reflect(pos[i], vel[i], cfg.arena);
    }
  }

  std::vector<Vec2> out;
  out.reserve(n * cfg.frames);
  std::vector<Vec2> acc(n);
  const std::size_t total = cfg.warmup + cfg.frames;
  for (std::size_t step = 0; step < total; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 sep{0, 0}, ali{0, 0}, coh{0, 0}, rep{0, 0};
      std::size_t n_sep = 0, n_ali = 0, n_coh = 0, n_rep = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const Vec2 diff = pos[i] - pos[j];
        const double d = norm(diff);
        if (d > 0.0 && d < cfg.separation_radius) {
          sep = sep + diff * (1.0 / (d * d));
          ++n_sep;
        }
        if (cluster[j] == cluster[i]) {
          if (d < cfg.alignment_radius) {
            ali = ali + vel[j];
            ++n_ali;
          }
          if (d < cfg.cohesion_radius) {
            coh = coh + pos[j];
            ++n_coh;
          }
        } else if (d > 0.0 && d < cfg.repulsion_radius) {
          rep = rep + diff * ((1.0 - d / cfg.repulsion_radius) / d);
          ++n_rep;
        }
      }
      auto steer = [&](Vec2 desired) { return limit(unit(desired) * cfg.max_speed - vel[i], cfg.max_force); };
      Vec2 a{0, 0};
      if (n_sep > 0 && norm(sep) > 0.0) a = a + steer(sep) * cfg.separation_weight;
      if (n_ali > 0 && norm(ali) > 0.0) a = a + steer(ali) * cfg.alignment_weight;
      if (n_coh > 0) {
        const Vec2 to_centroid = coh * (1.0 / static_cast<double>(n_coh)) - pos[i];
        if (norm(to_centroid) > 0.0) a = a + steer(to_centroid) * cfg.cohesion_weight;
      }
      if (n_rep > 0 && norm(rep) > 0.0) a = a + steer(rep) * cfg.repulsion_weight;
      const double w = two_pi * unit_interval(rng);
      a = a + Vec2{std::cos(w), std::sin(w)} * (cfg.wander_weight * cfg.max_force);
      acc[i] = a;
    }
    for (std::size_t i = 0; i < n; ++i) {
      vel[i] = limit(vel[i] + acc[i], cfg.max_speed);
      pos[i] = pos[i] + vel[i];
      reflect(pos[i], vel[i], cfg.arena);
    }
    if (step >= cfg.warmup) out.insert(out.end(), pos.begin(), pos.end());
  }
  return TrajectoryDataset(boid_ids(cfg.clusters, cfg.boids_per_cluster), cfg.frames, std::move(out));
}

TrajectoryDataset gen_flocking(const BoidsConfig& cfg) {
  cfg.validate();
  if (cfg.clusters != 1) throw ValidationError("the flocking model takes clusters = 1");
  const std::size_t n = cfg.boids_per_cluster;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit_interval(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const double deg = std::numbers::pi / 180.0;

  std::vector<Vec2> pos(n), heading(n), next(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = {cfg.arena.min_x + cfg.arena.width() * unit_interval(rng),
              cfg.arena.min_y + cfg.arena.height() * unit_interval(rng)};
    const double h = two_pi * unit_interval(rng);
    heading[i] = {std::cos(h), std::sin(h)};
  }

  // Rotates `h` towards `target` by at most max_turn radians (away from it when sign = -1).
  auto turn = [](Vec2 h, Vec2 target, double max_turn, double sign) {
    const double a = sign * signed_angle(h, target);
    return rotate(h, std::clamp(a, -max_turn, max_turn));
  };

  std::vector<Vec2> out;
  out.reserve(n * cfg.frames);
  const std::size_t total = cfg.warmup + cfg.frames;
  for (std::size_t step = 0; step < total; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t nearest = n;
      double nearest_d = std::numeric_limits<double>::infinity();
      Vec2 mean_heading{0, 0}, mean_towards{0, 0};
      std::size_t mates = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = distance(pos[i], pos[j]);
        if (d > cfg.vision) continue;
        ++mates;
        if (d < nearest_d) {
          nearest_d = d;
          nearest = j;
        }
        mean_heading = mean_heading + heading[j];
        mean_towards = mean_towards + unit(pos[j] - pos[i]);
      }
      Vec2 h = heading[i];
      if (mates > 0) {
        if (nearest_d < cfg.minimum_separation) {
          h = turn(h, heading[nearest], cfg.max_separate_turn * deg, -1.0);
        } else {
          if (norm(mean_heading) > 0.0) h = turn(h, mean_heading, cfg.max_align_turn * deg, 1.0);
          if (norm(mean_towards) > 0.0) h = turn(h, mean_towards, cfg.max_cohere_turn * deg, 1.0);
        }
      }
      next[i] = unit(h);
    }
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 v = next[i] * cfg.max_speed;
      pos[i] = pos[i] + v;
      reflect(pos[i], v, cfg.arena);
      heading[i] = unit(v);
    }
    if (step >= cfg.warmup) out.insert(out.end(), pos.begin(), pos.end());
  }
  return TrajectoryDataset(boid_ids(1, n), cfg.frames, std::move(out));
}

} // namespace motionorder
