#pragma once

#include "motionorder/core.hpp"
#include "motionorder/parallel.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace motionorder {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(Rgb, Rgb) = default;
};

/// 8-bit RGB raster, row-major, top row first.
class Image {
public:
  Image() = default;
  /// Throws SizeError when the raster would not fit in memory limits.
  Image(std::size_t width, std::size_t height, Rgb fill = {});

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  Rgb at(std::size_t x, std::size_t y) const;
  void set(std::size_t x, std::size_t y, Rgb c);
  void fill_rect(std::size_t x, std::size_t y, std::size_t w, std::size_t h, Rgb c);
  const std::vector<std::uint8_t>& bytes() const noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using TextChunks = std::vector<std::pair<std::string, std::string>>;

/// Deterministic PNG encoding (no timestamps); text pairs become tEXt chunks.
std::vector<std::uint8_t> encode_png(const Image& img, const TextChunks& text = {});
void write_png(const Image& img, const std::filesystem::path& path, const TextChunks& text = {});
Image decode_png(const std::vector<std::uint8_t>& data);

enum class ColorMode { frame, reference };

/// Bilinear blend of four corner colours over a reference box; north is high y.
struct Colormap2D {
  Rgb nw{0, 128, 128};
  Rgb ne{255, 220, 0};
  Rgb sw{30, 60, 255};
  Rgb se{220, 40, 40};
  BoundingBox box{0.0, 0.0, 1.0, 1.0};
  ColorMode mode = ColorMode::frame;
  std::size_t reference_frame = 0; // used when mode == reference

  /// Colormap over the dataset's global bounding box (degenerate axes widened to 1).
  static Colormap2D for_dataset(const TrajectoryDataset& ds);

  void validate() const;
  Rgb operator()(Vec2 p) const;
  /// Colour of entity i as drawn at frame t under the configured mode.
  Rgb entity_color(const TrajectoryDataset& ds, std::size_t t, std::size_t i) const;
  /// Anchor description recorded in image metadata.
  std::string describe() const;
};

ColorMode parse_color_mode(const std::string& s);

/// Column t, rows r*scale.. show the colour of the entity at rank r in frame t.
Image render_rug(const TrajectoryDataset& ds, const OrderingSummary& ord, const Colormap2D& cm,
                 std::size_t scale = 1, Exec exec = Exec::parallel);

inline constexpr double kKsdiCap = 37.5;
inline constexpr double kKsteCap = 6.25;
inline constexpr Rgb kKsdiColor{230, 180, 0};
inline constexpr Rgb kKsteColor{40, 90, 220};

/// Bar chart, one bar per value, bar height proportional to min(value, cap). Bars are
/// right-aligned in a strip `columns` cells wide so a T-1 transition series lines up with a T-frame rug.
Image render_metric_strip(std::span<const double> values, double cap, std::size_t height, std::size_t columns,
                          std::size_t scale = 1, Rgb color = kKsdiColor);

/// Rug whose brightness ramps from black (0) to `color` at the 99th percentile of the
/// contributions (negative contributions count as 0). contributions is T x n by entity.
Image render_heat_rug(const OrderingSummary& ord, std::span<const double> contributions, std::size_t scale = 1,
                      Rgb color = kKsdiColor);

struct MotionLinesLayout {
  std::size_t height = 300;
  std::size_t column_width = 4; // pixels per frame
  std::size_t margin = 4;
};

/// Pixel row of each entity at frame t: per-frame coordinate range mapped onto
/// [margin, height-1-margin], lowest coordinate at the top.
std::vector<double> motionline_rows(const OrderingSummary& ord, std::size_t t, const MotionLinesLayout& layout);

/// One polyline per entity through its per-frame rows. Requires coordinates.
Image render_motionlines(const TrajectoryDataset& ds, const OrderingSummary& ord, const Colormap2D& cm,
                         const MotionLinesLayout& layout = {});

} // namespace motionorder
