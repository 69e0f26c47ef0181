#pragma once

#include "motionorder/core.hpp"
#include "motionorder/keyvalue.hpp"

#include <cstdint>

namespace motionorder {

struct BoidsConfig {
  std::size_t clusters = 3;
  std::size_t boids_per_cluster = 50;
  std::size_t frames = 1000;
  std::size_t warmup = 200; // simulated but not recorded
  BoundingBox arena{0.0, 0.0, 1000.0, 1000.0};

  // Reynolds steering
  double separation_radius = 15.0;
  double alignment_radius = 60.0;
  double cohesion_radius = 120.0;
  double repulsion_radius = 300.0;
  double separation_weight = 4.0;
  double alignment_weight = 1.0;
  double cohesion_weight = 1.2;
  double repulsion_weight = 3.0;
  double wander_weight = 0.3;
  double max_speed = 2.0;
  double max_force = 0.1;
  double spawn_radius = 40.0;

  // Turn-limited flocking (angles in degrees, constant speed = max_speed)
  double vision = 50.0;
  double minimum_separation = 12.0;
  double max_separate_turn = 1.5;
  double max_align_turn = 5.0;
  double max_cohere_turn = 3.0;

  std::uint64_t seed = 1;

  void validate() const;

  /// Overrides fields from a key-value file; unknown keys raise ParseError.
  void apply(const KeyValueFile& kv);
  void set(const std::string& key, const std::string& value, std::size_t line = 0);
};

/// Reynolds flocking inside each cluster; between clusters only a repulsion force acts.
/// Walls reflect. Entity ids are c<cluster>_<index>.
TrajectoryDataset gen_reynolds_clusters(const BoidsConfig& cfg);

/// Single flock with per-rule turn limits and constant speed; walls reflect.
TrajectoryDataset gen_flocking(const BoidsConfig& cfg);

} // namespace motionorder
