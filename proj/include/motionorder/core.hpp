#pragma once

#include "motionorder/error.hpp"
#include "motionorder/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace motionorder {

using Rank = std::int32_t;

/// n entities observed at T consecutive frames. Positions are stored frame-major,
/// so `frame(t)` is a contiguous view of P(t). Immutable once constructed.
class TrajectoryDataset {
public:
  TrajectoryDataset() = default;

  /// Throws ValidationError if the shape is inconsistent or a coordinate is non-finite.
  TrajectoryDataset(std::vector<std::string> entity_ids, std::size_t num_frames,
                    std::vector<Vec2> positions, std::optional<double> frame_rate = std::nullopt,
                    std::int64_t first_frame = 0);

  std::size_t num_entities() const noexcept { return ids_.size(); }
  std::size_t num_frames() const noexcept { return num_frames_; }

  std::span<const Vec2> frame(std::size_t t) const {
    return {positions_.data() + t * ids_.size(), ids_.size()};
  }
  Vec2 at(std::size_t t, std::size_t i) const { return positions_[t * ids_.size() + i]; }

  const std::vector<std::string>& entity_ids() const noexcept { return ids_; }
  const std::vector<Vec2>& positions() const noexcept { return positions_; }
  const BoundingBox& bounds() const noexcept { return bounds_; }
  std::optional<double> frame_rate() const noexcept { return frame_rate_; }
  /// Frame label of t = 0 as it appeared in the input file.
  std::int64_t first_frame() const noexcept { return first_frame_; }

  /// Copy with frames [begin, end).
  TrajectoryDataset slice(std::size_t begin, std::size_t end) const;

private:
  std::vector<std::string> ids_;
  std::size_t num_frames_ = 0;
  std::vector<Vec2> positions_;
  std::optional<double> frame_rate_;
  std::int64_t first_frame_ = 0;
  BoundingBox bounds_;
};

/// One permutation per frame: ranks[t][i] is the position of entity i in frame t.
class OrderingSummary {
public:
  OrderingSummary() = default;

  /// Throws ValidationError unless each frame row is a permutation of 0..n-1.
  OrderingSummary(std::size_t num_frames, std::size_t num_entities, std::vector<Rank> ranks,
                  std::string method_tag = {});

  /// Builds ranks by sorting each frame's coordinates (ties by entity index) and keeps them.
  static OrderingSummary from_coords(std::size_t num_frames, std::size_t num_entities,
                                     std::vector<double> coords, std::string method_tag = {});

  std::size_t num_frames() const noexcept { return num_frames_; }
  std::size_t num_entities() const noexcept { return num_entities_; }

  std::span<const Rank> ranks(std::size_t t) const {
    return {ranks_.data() + t * num_entities_, num_entities_};
  }
  const std::vector<Rank>& all_ranks() const noexcept { return ranks_; }

  bool has_coords() const noexcept { return !coords_.empty(); }
  std::span<const double> coords(std::size_t t) const {
    return {coords_.data() + t * num_entities_, num_entities_};
  }
  const std::vector<double>& all_coords() const noexcept { return coords_; }

  const std::string& method_tag() const noexcept { return method_tag_; }
  void set_method_tag(std::string tag) { method_tag_ = std::move(tag); }

  /// Attaches coordinates; throws ValidationError if they do not reproduce the ranks.
  void attach_coords(std::vector<double> coords);

  /// Entities of frame t listed by ascending rank.
  std::vector<std::size_t> sequence(std::size_t t) const;

private:
  std::size_t num_frames_ = 0;
  std::size_t num_entities_ = 0;
  std::vector<Rank> ranks_;
  std::vector<double> coords_;
  std::string method_tag_;
};

/// Ranks from 1D coordinates: ascending coordinate, ties by entity index.
std::vector<Rank> ranks_from_coords(std::span<const double> coords);

/// Ranks from a visiting sequence (sequence[r] = entity at rank r).
std::vector<Rank> ranks_from_sequence(std::span<const std::size_t> sequence);

/// Ranks from sort keys: ascending key, ties by entity index.
std::vector<Rank> ranks_from_keys(std::span<const std::uint64_t> keys);

bool is_permutation_ranking(std::span<const Rank> ranks);

struct CsvSchema {
  std::string frame = "frame";
  std::string id = "id";
  std::string x = "x";
  std::string y = "y";
};

TrajectoryDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
TrajectoryDataset parse_csv(const std::string& text, const CsvSchema& schema = {});
void save_csv(const TrajectoryDataset& ds, const std::filesystem::path& path);
std::string format_csv(const TrajectoryDataset& ds);

/// `frame,rank,id` rows, one per entity per frame.
void save_ordering_csv(const TrajectoryDataset& ds, const OrderingSummary& ord,
                       const std::filesystem::path& path);
/// `frame,id,coord` rows; requires coordinates.
void save_coords_csv(const TrajectoryDataset& ds, const OrderingSummary& ord,
                     const std::filesystem::path& path);
/// Reads a `frame,rank,id` file written for `ds` (and optionally its coords file).
OrderingSummary load_ordering_csv(const TrajectoryDataset& ds, const std::filesystem::path& path,
                                  const std::optional<std::filesystem::path>& coords_path = {});

/// Aspect-preserving affine map of the global bounding box into [0,1]^2, centered on
/// the shorter axis. Throws DegenerateInputError when the bounds have zero extent.
TrajectoryDataset normalize(const TrajectoryDataset& ds);

/// Fixed order: every frame uses the entity input order.
OrderingSummary fxd_order(const TrajectoryDataset& ds);

} // namespace motionorder
