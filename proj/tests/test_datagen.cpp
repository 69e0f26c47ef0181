#include "doctest.h"
#include "helpers.hpp"

#include "motionorder/cluster.hpp"
#include "motionorder/datagen.hpp"

#include <cmath>

using namespace motionorder;

namespace {

bool inside(const BoundingBox& box, Vec2 p) { return box.contains(p); }

} // namespace

TEST_SUITE("datagen") {

TEST_CASE("reynolds output shape, ids and determinism") {
  BoidsConfig cfg;
  cfg.frames = 50;
  cfg.warmup = 10;
  cfg.seed = 5;
  const auto a = gen_reynolds_clusters(cfg);
  CHECK(a.num_entities() == 150);
  CHECK(a.num_frames() == 50);
  CHECK(a.entity_ids().front() == "c0_00");
  CHECK(a.entity_ids().back() == "c2_49");
  const auto b = gen_reynolds_clusters(cfg);
  CHECK(a.positions() == b.positions());
  cfg.seed = 6;
  CHECK(gen_reynolds_clusters(cfg).positions() != a.positions());
}

TEST_CASE("reynolds stays in the arena at bounded speed") {
  BoidsConfig cfg;
  cfg.frames = 300;
  cfg.warmup = 0;
  cfg.seed = 9;
  const auto ds = gen_reynolds_clusters(cfg);
  for (Vec2 p : ds.positions()) CHECK(inside(cfg.arena, p));
  for (std::size_t t = 1; t < ds.num_frames(); ++t)
    for (std::size_t i = 0; i < ds.num_entities(); ++i)
      CHECK(distance(ds.at(t, i), ds.at(t - 1, i)) <= cfg.max_speed + 1e-9);
}

TEST_CASE("reynolds produces three separable clusters") {
  BoidsConfig cfg;
  cfg.frames = 200;
  cfg.seed = 7;
  const auto ds = gen_reynolds_clusters(cfg);
  std::size_t three = 0;
  for (std::size_t t = 0; t < ds.num_frames(); ++t)
    if (cut_clusters(clc_tree(ds.frame(t)), 2.0).size() == 3) ++three;
  CHECK(static_cast<double>(three) >= 0.9 * static_cast<double>(ds.num_frames()));
}

TEST_CASE("single-cluster reynolds flock stays finite") {
  BoidsConfig cfg;
  cfg.clusters = 1;
  cfg.boids_per_cluster = 40;
  cfg.frames = 100;
  const auto ds = gen_reynolds_clusters(cfg);
  CHECK(ds.entity_ids().front() == "b00");
  for (Vec2 p : ds.positions()) CHECK((std::isfinite(p.x) && std::isfinite(p.y)));
}

TEST_CASE("turn-limited flocking stays in bounds and is seeded") {
  BoidsConfig cfg;
  cfg.clusters = 1;
  cfg.boids_per_cluster = 100;
  cfg.frames = 500;
  cfg.warmup = 0;
  const auto a = gen_flocking(cfg);
  for (Vec2 p : a.positions()) CHECK(inside(cfg.arena, p));
  CHECK(gen_flocking(cfg).positions() == a.positions());
  cfg.clusters = 2;
  CHECK_THROWS_AS(gen_flocking(cfg), ValidationError);
}

TEST_CASE("zero turn limits give straight motion between reflections") {
  BoidsConfig cfg;
  cfg.clusters = 1;
  cfg.boids_per_cluster = 30;
  cfg.frames = 200;
  cfg.warmup = 0;
  cfg.max_separate_turn = cfg.max_align_turn = cfg.max_cohere_turn = 0.0;
  const auto ds = gen_flocking(cfg);
  std::size_t straight = 0, checked = 0;
  for (std::size_t i = 0; i < ds.num_entities(); ++i)
    for (std::size_t t = 2; t < ds.num_frames(); ++t) {
      const Vec2 d1 = ds.at(t - 1, i) - ds.at(t - 2, i), d2 = ds.at(t, i) - ds.at(t - 1, i);
      const bool free_flight = std::abs(norm(d1) - cfg.max_speed) < 1e-9 && std::abs(norm(d2) - cfg.max_speed) < 1e-9;
      if (!free_flight) continue;
      ++checked;
      if (std::abs(cross(d1, d2)) < 1e-9 && dot(d1, d2) > 0.0) ++straight;
    }
  CHECK(checked > 0);
  // A step that bounces can still land at max_speed from the previous point; those are rare.
  CHECK(static_cast<double>(straight) >= 0.99 * static_cast<double>(checked));
}

TEST_CASE("config overrides and validation") {
  BoidsConfig cfg;
  cfg.apply(KeyValueFile::parse("clusters = 2\nseparation_weight = 1.5\narena_max_x = 500\n"));
  CHECK(cfg.clusters == 2);
  CHECK(cfg.separation_weight == 1.5);
  CHECK(cfg.arena.max_x == 500.0);
  CHECK_THROWS_AS(cfg.apply(KeyValueFile::parse("bogus = 1\n")), ParseError);
  CHECK_THROWS_AS(cfg.set("max_speed", "fast"), ValidationError);
  BoidsConfig bad;
  bad.max_speed = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = {};
  bad.frames = 0;
  CHECK_THROWS_AS(gen_reynolds_clusters(bad), ValidationError);
}

} // TEST_SUITE
