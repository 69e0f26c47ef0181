#pragma once

#include "motionorder/core.hpp"
#include "motionorder/parallel.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace motionorder {

struct NeighborSpec {
  std::size_t k = 10;

  /// min(k, n-1); k = 0 is rejected.
  std::size_t effective_k(std::size_t n) const;
  /// Non-empty when k had to be clamped for n entities.
  std::optional<std::string> clamp_warning(std::size_t n) const;
};

/// 1 + 1/2 + ... + 1/k.
double harmonic_number(std::size_t k);

struct MetricSummary {
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  double stddev = 0.0; // population
};

struct MetricSeries {
  std::string name;
  std::vector<double> values;
  MetricSummary summary;

  /// NaN summary for an empty series.
  static MetricSummary summarize(std::span<const double> values);
};

/// Value assigned to a neighbour at rank difference d >= 1: 2d - 1.
std::int64_t tie_rank_value(std::int64_t d);

/// k Euclidean nearest neighbours of every entity (self excluded, ties by index) with distances.
struct FrameNeighbors {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> index; // n * k, row i = neighbours of i by increasing distance
  std::vector<double> distance;     // n * k
  double diameter = 0.0;            // bounding-box diagonal of the frame

  static FrameNeighbors compute(std::span<const Vec2> frame, std::size_t k);
};

double ksra(const FrameNeighbors& nb, std::span<const Rank> ranks);
double ksdi(const FrameNeighbors& nb, std::span<const Rank> ranks);
double ksra(std::span<const Vec2> frame, std::span<const Rank> ranks, const NeighborSpec& spec = {});
double ksdi(std::span<const Vec2> frame, std::span<const Rank> ranks, const NeighborSpec& spec = {});

std::int64_t jmp(std::span<const Rank> prev, std::span<const Rank> next);
std::int64_t crs(std::span<const Rank> prev, std::span<const Rank> next);
double kendall_tau(std::span<const Rank> prev, std::span<const Rank> next);
double kste(std::span<const Rank> prev, std::span<const Rank> next, const NeighborSpec& spec = {});

/// Per-entity share of the KSdi excess over a perfect ordering: sum_j w(r-1) / sum of all weights.
/// The shares sum to KSdi - 1.
std::vector<double> ksdi_contributions(const FrameNeighbors& nb, std::span<const Rank> ranks);

/// Per-entity share of the KSte excess over an unchanged order: sum_j w(v - v_unchanged) / sum of all
/// weights. Shares sum to KSte(prev, next) - KSte(prev, prev) and may be negative.
std::vector<double> kste_contributions(std::span<const Rank> prev, std::span<const Rank> next,
                                       const NeighborSpec& spec = {});

/// Neighbour lists for every frame; reusable across orderings of the same dataset.
std::vector<FrameNeighbors> precompute_neighbors(const TrajectoryDataset& ds, const NeighborSpec& spec,
                                                 Exec exec = Exec::parallel);

inline constexpr const char* kMetricNames[] = {"KSra", "KSdi", "JMP", "CRS", "KSte"};

/// KSra and KSdi per frame, JMP, CRS and KSte per transition, in that order.
std::vector<MetricSeries> evaluate(const TrajectoryDataset& ds, const OrderingSummary& ord,
                                   const NeighborSpec& spec = {}, Exec exec = Exec::parallel,
                                   const std::vector<FrameNeighbors>* neighbors = nullptr);

/// T x n per-entity contributions (row t = frame t). The KSte table has a zero first row.
std::vector<double> ksdi_contribution_table(const TrajectoryDataset& ds, const OrderingSummary& ord,
                                            const NeighborSpec& spec = {}, Exec exec = Exec::parallel);
std::vector<double> kste_contribution_table(const OrderingSummary& ord, const NeighborSpec& spec = {},
                                            Exec exec = Exec::parallel);

} // namespace motionorder
