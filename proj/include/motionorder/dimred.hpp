#pragma once

#include "motionorder/core.hpp"
#include "motionorder/parallel.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace motionorder {

// ---------------------------------------------------------------------------
// PCA-based orderings

struct PrincipalAxis {
  Vec2 direction{1.0, 0.0}; // unit eigenvector of the larger eigenvalue
  double v1 = 0.0;          // variance along direction
  double v2 = 0.0;          // variance along the orthogonal axis
  bool isotropic = true;    // v1 == v2; direction is then the (1,0) placeholder

  /// v2 / v1, defined as 0 when v1 == 0.
  double stretch_ratio() const { return v1 > 0.0 ? v2 / v1 : 0.0; }
};

/// Closed-form eigen-decomposition of the 2x2 population covariance of the points.
PrincipalAxis pca_frame(std::span<const Vec2> frame);

/// Same, restricted to the listed members of the frame.
PrincipalAxis pca_subset(std::span<const Vec2> frame, std::span<const std::size_t> members);

struct SpcConfig {
  double sigma = 0.5; // frames with v2/v1 <= sigma count as stretched

  void validate() const;
};

struct ProjectionTimeline {
  std::vector<Vec2> pv;
  std::vector<double> v1;
  std::vector<double> v2;
  std::vector<char> interpolated;
};

/// Stable principal component timeline. Stretched frames (and the first and last)
/// use their sign-consistent first principal component; frames in between have their
/// projection vector rotated linearly through the accumulated signed angle.
ProjectionTimeline spc_timeline(const TrajectoryDataset& ds, const SpcConfig& cfg);

/// coords[t][i] = <p_i(t), pv[t]>; ranks by ascending coordinate.
OrderingSummary project_order(const TrajectoryDataset& ds, const ProjectionTimeline& tl,
                              Exec exec = Exec::parallel);

OrderingSummary spc_order(const TrajectoryDataset& ds, const SpcConfig& cfg, Exec exec = Exec::parallel);

/// Per-frame first principal component with its sign flipped to agree with the previous
/// frame; no interpolation.
OrderingSummary pca_order(const TrajectoryDataset& ds);

struct CpcConfig {
  SpcConfig spc;
  double cut_factor = 2.0;
};

struct CpcResult {
  OrderingSummary ordering;
  /// Per frame: the cut_clusters partition, parts sorted by smallest entity.
  std::vector<std::vector<std::vector<std::size_t>>> partitions;
  /// Per frame, per part: the part's projection vector.
  std::vector<std::vector<Vec2>> cluster_pv;
};

/// Clustered principal component ordering: per-cluster SPC, clusters ordered by the
/// projection of their centroids on the whole-set first principal component.
CpcResult cpc_run(const TrajectoryDataset& ds, const CpcConfig& cfg, Exec exec = Exec::parallel);
OrderingSummary cpc_order(const TrajectoryDataset& ds, const CpcConfig& cfg, Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// Gradient-descent embeddings

enum class EmbedInit { random, previous_frame };

struct Embedding1D {
  std::size_t num_frames = 0;
  std::size_t num_entities = 0;
  std::vector<double> coords;
  std::vector<int> iterations_used;
  std::vector<double> final_cost;
  std::vector<std::string> warnings;

  std::span<const double> frame(std::size_t t) const {
    return {coords.data() + t * num_entities, num_entities};
  }
  OrderingSummary to_ordering(std::string tag) const;
};

/// Deterministic per-frame seed derived from a run seed.
std::uint64_t frame_seed(std::uint64_t seed, std::size_t frame);

struct SammonConfig {
  int iterations = 500;
  double step = 0.3; // Sammon's magic factor; halved while a step would raise the cost
  std::uint64_t seed = 1;
  EmbedInit init = EmbedInit::random;

  void validate() const;
};

/// Pairwise distances with coincident points separated by a seeded 1e-9 jitter.
std::vector<double> sammon_distances(std::span<const Vec2> frame, std::uint64_t seed);

/// C = (1/sum d) * sum_{i<j} (d_ij - |x_i - x_j|)^2 / d_ij over a precomputed distance matrix.
double sammon_cost(std::span<const double> dist, std::span<const double> x);
void sammon_gradient(std::span<const double> dist, std::span<const double> x, std::span<double> grad,
                     Exec exec = Exec::serial);

struct SammonFrameResult {
  int iterations = 0;
  double cost = 0.0;
  std::vector<double> accepted_costs; // cost after every accepted step
};

/// Minimises the Sammon cost starting from x (modified in place).
SammonFrameResult sammon_descent(std::span<const double> dist, std::span<double> x, const SammonConfig& cfg,
                                 Exec exec = Exec::serial);

Embedding1D sammon_embed(const TrajectoryDataset& ds, const SammonConfig& cfg, Exec exec = Exec::parallel);

struct TsneConfig {
  double perplexity = 40.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch = 250;
  double exaggeration = 4.0;
  int exaggeration_iterations = 100;
  std::uint64_t seed = 1;
  EmbedInit init = EmbedInit::random;

  void validate() const;
};

struct ConditionalAffinities {
  std::size_t n = 0;
  std::vector<double> p;          // row i holds P_{j|i}
  std::vector<double> beta;       // 1 / (2 sigma_i^2)
  std::vector<double> perplexity; // realised 2^H(P_i)
  std::size_t unconverged = 0;
};

/// Per-point bandwidth search so each conditional distribution hits the target perplexity.
ConditionalAffinities tsne_conditional(std::span<const Vec2> frame, double perplexity);

/// Symmetrised joint affinities P_ij = (P_{j|i} + P_{i|j}) / 2n, zero diagonal.
std::vector<double> tsne_joint(const ConditionalAffinities& cond);

/// KL(P || Q) for 1D coordinates y with Student-t low-dimensional affinities.
double tsne_cost(std::span<const double> P, std::span<const double> y);
void tsne_gradient(std::span<const double> P, std::span<const double> y, std::span<double> grad,
                   Exec exec = Exec::serial);

Embedding1D tsne_embed(const TrajectoryDataset& ds, const TsneConfig& cfg, Exec exec = Exec::parallel);

} // namespace motionorder
