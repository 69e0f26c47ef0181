#include "motionorder/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace motionorder {

namespace {

constexpr std::size_t kMaxDimension = 1u << 20;   // pixels per side
constexpr std::size_t kMaxPixels = std::size_t{1} << 31;

std::uint8_t channel(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

Rgb lerp(Rgb a, Rgb b, double t) {
  auto mix = [t](std::uint8_t x, std::uint8_t y) { return (1.0 - t) * x + t * y; };
  return {channel(mix(a.r, b.r)), channel(mix(a.g, b.g)), channel(mix(a.b, b.b))};
}

} // namespace

Image::Image(std::size_t width, std::size_t height, Rgb fill) : width_(width), height_(height) {
  if (width == 0 || height == 0) throw SizeError("image dimensions must be positive");
  if (width > kMaxDimension || height > kMaxDimension || width > kMaxPixels / height)
    throw SizeError("image of " + std::to_string(width) + "x" + std::to_string(height) +
                    " pixels is too large; reduce --scale or the number of frames");
  pixels_.resize(width * height * 3);
  for (std::size_t i = 0; i < width * height; ++i) {
    pixels_[3 * i] = fill.r;
    pixels_[3 * i + 1] = fill.g;
    pixels_[3 * i + 2] = fill.b;
  }
}

Rgb Image::at(std::size_t x, std::size_t y) const {
  const std::size_t o = 3 * (y * width_ + x);
  return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
}

void Image::set(std::size_t x, std::size_t y, Rgb c) {
  const std::size_t o = 3 * (y * width_ + x);
  pixels_[o] = c.r;
  pixels_[o + 1] = c.g;
  pixels_[o + 2] = c.b;
}

void Image::fill_rect(std::size_t x, std::size_t y, std::size_t w, std::size_t h, Rgb c) {
  for (std::size_t yy = y; yy < std::min(y + h, height_); ++yy)
    for (std::size_t xx = x; xx < std::min(x + w, width_); ++xx) set(xx, yy, c);
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw Error(std::string("PNG: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void flush_nothing(png_structp) {}

struct ReadCursor {
  const std::vector<std::uint8_t>* data;
  std::size_t pos;
};

void read_bytes(png_structp png, png_bytep dst, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->data->size()) png_error(png, "truncated data");
  std::memcpy(dst, cur->data->data() + cur->pos, len);
  cur->pos += len;
}

} // namespace

std::vector<std::uint8_t> encode_png(const Image& img, const TextChunks& text) {
  if (img.width() == 0 || img.height() == 0) throw SizeError("cannot encode an empty image");
  std::vector<std::uint8_t> out;
  PngWriteGuard g;
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!g.png) throw Error("PNG: cannot allocate writer");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw Error("PNG: cannot allocate info");
  png_set_write_fn(g.png, &out, append_bytes, flush_nothing);
  png_set_compression_level(g.png, 6);
  png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_text> chunks(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
    chunks[i].key = const_cast<char*>(text[i].first.c_str());
    chunks[i].text = const_cast<char*>(text[i].second.c_str());
    chunks[i].text_length = text[i].second.size();
  }
  if (!chunks.empty()) png_set_text(g.png, g.info, chunks.data(), static_cast<int>(chunks.size()));
  png_write_info(g.png, g.info);
  const auto* base = img.bytes().data();
  for (std::size_t y = 0; y < img.height(); ++y)
    png_write_row(g.png, const_cast<png_bytep>(base + y * img.width() * 3));
  png_write_end(g.png, nullptr);
  return out;
}

void write_png(const Image& img, const std::filesystem::path& path, const TextChunks& text) {
  const auto bytes = encode_png(img, text);
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw Error("cannot write '" + path.string() + "'");
  const std::size_t written = std::fwrite(bytes.data(), 1, bytes.size(), f);
  const bool ok = std::fclose(f) == 0 && written == bytes.size();
  if (!ok) throw Error("write failed for '" + path.string() + "'");
}

Image decode_png(const std::vector<std::uint8_t>& data) {
  PngReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!g.png) throw Error("PNG: cannot allocate reader");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw Error("PNG: cannot allocate info");
  ReadCursor cur{&data, 0};
  png_set_read_fn(g.png, &cur, read_bytes);
  png_read_info(g.png, g.info);
  if (png_get_color_type(g.png, g.info) != PNG_COLOR_TYPE_RGB || png_get_bit_depth(g.png, g.info) != 8)
    throw Error("PNG: only 8-bit RGB images are supported");
  const std::size_t w = png_get_image_width(g.png, g.info), h = png_get_image_height(g.png, g.info);
  Image img(w, h);
  std::vector<std::uint8_t> row(w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    png_read_row(g.png, row.data(), nullptr);
    for (std::size_t x = 0; x < w; ++x) img.set(x, y, {row[3 * x], row[3 * x + 1], row[3 * x + 2]});
  }
  return img;
}

// ---------------------------------------------------------------------------
// Colour

Colormap2D Colormap2D::for_dataset(const TrajectoryDataset& ds) {
  Colormap2D cm;
  BoundingBox b = ds.bounds();
  if (b.empty()) b = {0.0, 0.0, 1.0, 1.0};
  if (!(b.width() > 0.0)) {
    b.min_x -= 0.5;
    b.max_x += 0.5;
  }
  if (!(b.height() > 0.0)) {
    b.min_y -= 0.5;
    b.max_y += 0.5;
  }
  cm.box = b;
  return cm;
}

void Colormap2D::validate() const {
  if (!(box.width() > 0.0) || !(box.height() > 0.0))
    throw ValidationError("colormap reference box must have positive area");
}

Rgb Colormap2D::operator()(Vec2 p) const {
  const double u = std::clamp((p.x - box.min_x) / box.width(), 0.0, 1.0);
  const double v = std::clamp((p.y - box.min_y) / box.height(), 0.0, 1.0);
  // Blend in double precision and round once.
  auto blend = [&](std::uint8_t a_nw, std::uint8_t a_ne, std::uint8_t a_sw, std::uint8_t a_se) {
    const double top = (1.0 - u) * a_nw + u * a_ne;
    const double bottom = (1.0 - u) * a_sw + u * a_se;
    return channel(v * top + (1.0 - v) * bottom);
  };
  return {blend(nw.r, ne.r, sw.r, se.r), blend(nw.g, ne.g, sw.g, se.g), blend(nw.b, ne.b, sw.b, se.b)};
}

Rgb Colormap2D::entity_color(const TrajectoryDataset& ds, std::size_t t, std::size_t i) const {
  if (mode == ColorMode::reference) {
    if (reference_frame >= ds.num_frames())
      throw ValidationError("reference frame " + std::to_string(reference_frame) + " is out of range");
    return (*this)(ds.at(reference_frame, i));
  }
  return (*this)(ds.at(t, i));
}

std::string Colormap2D::describe() const {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "nw=%d,%d,%d ne=%d,%d,%d sw=%d,%d,%d se=%d,%d,%d box=%.17g,%.17g,%.17g,%.17g mode=%s%s", nw.r, nw.g,
                nw.b, ne.r, ne.g, ne.b, sw.r, sw.g, sw.b, se.r, se.g, se.b, box.min_x, box.min_y, box.max_x,
                box.max_y, mode == ColorMode::frame ? "frame" : "reference",
                mode == ColorMode::frame ? "" : (":" + std::to_string(reference_frame)).c_str());
  return buf;
}

ColorMode parse_color_mode(const std::string& s) {
  if (s == "frame") return ColorMode::frame;
  if (s == "reference") return ColorMode::reference;
  throw ValidationError("color mode must be 'frame' or 'reference', got '" + s + "'");
}

// ---------------------------------------------------------------------------
// Rugs

namespace {

void check_match(const TrajectoryDataset& ds, const OrderingSummary& ord) {
  if (ds.num_frames() != ord.num_frames() || ds.num_entities() != ord.num_entities())
    throw ValidationError("ordering does not match the dataset shape");
}

std::size_t checked_scale(std::size_t scale) {
  if (scale == 0) throw ValidationError("scale must be at least 1");
  return scale;
}

} // namespace

Image render_rug(const TrajectoryDataset& ds, const OrderingSummary& ord, const Colormap2D& cm, std::size_t scale,
                 Exec exec) {
  check_match(ds, ord);
  cm.validate();
  checked_scale(scale);
  const std::size_t T = ds.num_frames(), n = ds.num_entities();
  if (T > kMaxDimension / scale || n > kMaxDimension / scale)
    throw SizeError("rug of " + std::to_string(T) + " frames x " + std::to_string(n) + " entities at scale " +
                    std::to_string(scale) + " is too large; reduce --scale");
  Image img(T * scale, n * scale);
  parallel_for(exec, T, [&](std::size_t t) {
    const auto ranks = ord.ranks(t);
    for (std::size_t i = 0; i < n; ++i)
      img.fill_rect(t * scale, static_cast<std::size_t>(ranks[i]) * scale, scale, scale, cm.entity_color(ds, t, i));
  });
  return img;
}

Image render_metric_strip(std::span<const double> values, double cap, std::size_t height, std::size_t columns,
                          std::size_t scale, Rgb color) {
  checked_scale(scale);
  if (values.empty()) throw ValidationError("metric strip needs at least one value");
  if (!(cap > 0.0)) throw ValidationError("metric cap must be positive");
  if (height < 2) throw ValidationError("metric strip height must be at least 2");
  columns = std::max(columns, values.size());
  if (columns > kMaxDimension / scale) throw SizeError("metric strip is too wide; reduce --scale");
  const Rgb white{255, 255, 255}, baseline{160, 160, 160};
  Image img(columns * scale, height, white);
  const std::size_t usable = height - 1; // bottom row is the baseline
  const std::size_t offset = columns - values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::isfinite(values[i]) ? std::clamp(values[i], 0.0, cap) : cap;
    const auto bar = static_cast<std::size_t>(std::lround(v / cap * static_cast<double>(usable)));
    if (bar > 0) img.fill_rect((offset + i) * scale, usable - bar, scale, bar, color);
  }
  img.fill_rect(0, height - 1, columns * scale, 1, baseline);
  return img;
}

Image render_heat_rug(const OrderingSummary& ord, std::span<const double> contributions, std::size_t scale,
                      Rgb color) {
  checked_scale(scale);
  const std::size_t T = ord.num_frames(), n = ord.num_entities();
  if (contributions.size() != T * n) throw ValidationError("contributions must be shaped frames x entities");
  if (T > kMaxDimension / scale || n > kMaxDimension / scale) throw SizeError("heat rug is too large; reduce --scale");
  std::vector<double> v(contributions.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = std::isfinite(contributions[i]) ? std::max(0.0, contributions[i]) : 0.0;
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size())));
  double top = sorted[rank > 0 ? rank - 1 : 0];
  if (!(top > 0.0)) top = sorted.back();
  Image img(T * scale, n * scale);
  for (std::size_t t = 0; t < T; ++t) {
    const auto ranks = ord.ranks(t);
    for (std::size_t i = 0; i < n; ++i) {
      const double level = top > 0.0 ? std::min(1.0, v[t * n + i] / top) : 0.0;
      img.fill_rect(t * scale, static_cast<std::size_t>(ranks[i]) * scale, scale, scale, lerp({0, 0, 0}, color, level));
    }
  }
  return img;
}

std::vector<double> motionline_rows(const OrderingSummary& ord, std::size_t t, const MotionLinesLayout& layout) {
  if (!ord.has_coords())
    throw ContractError("MotionLines need 1D coordinates; use a coordinate-producing method (spc, cpc, pca, sam, "
                        "samp, sne, snep)");
  if (layout.height < 2 * layout.margin + 2) throw ValidationError("MotionLines height is too small for the margins");
  const auto c = ord.coords(t);
  const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
  const double top = static_cast<double>(layout.margin);
  const double span = static_cast<double>(layout.height - 1 - 2 * layout.margin);
  std::vector<double> rows(c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    rows[i] = *hi > *lo ? top + (c[i] - *lo) / (*hi - *lo) * span : top + 0.5 * span;
  return rows;
}

namespace {

void draw_line(Image& img, long x0, long y0, long x1, long y1, Rgb c) {
  const long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  for (;;) {
    if (x0 >= 0 && y0 >= 0 && static_cast<std::size_t>(x0) < img.width() &&
        static_cast<std::size_t>(y0) < img.height())
      img.set(static_cast<std::size_t>(x0), static_cast<std::size_t>(y0), c);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

} // namespace

Image render_motionlines(const TrajectoryDataset& ds, const OrderingSummary& ord, const Colormap2D& cm,
                         const MotionLinesLayout& layout) {
  check_match(ds, ord);
  cm.validate();
  if (!ord.has_coords())
    throw ContractError("MotionLines need 1D coordinates; use a coordinate-producing method (spc, cpc, pca, sam, "
                        "samp, sne, snep)");
  if (layout.column_width == 0) throw ValidationError("MotionLines column width must be at least 1");
  const std::size_t T = ds.num_frames(), n = ds.num_entities();
  if (T > kMaxDimension / layout.column_width) throw SizeError("MotionLines image is too wide; reduce the column width");
  Image img(T * layout.column_width, layout.height, {255, 255, 255});
  const long half = static_cast<long>(layout.column_width / 2);
  std::vector<double> prev = motionline_rows(ord, 0, layout);
  for (std::size_t i = 0; i < n; ++i)
    img.set(static_cast<std::size_t>(half), static_cast<std::size_t>(std::lround(prev[i])), cm.entity_color(ds, 0, i));
  for (std::size_t t = 1; t < T; ++t) {
    const std::vector<double> cur = motionline_rows(ord, t, layout);
    const long x0 = static_cast<long>((t - 1) * layout.column_width) + half;
    const long x1 = static_cast<long>(t * layout.column_width) + half;
    for (std::size_t i = 0; i < n; ++i)
      draw_line(img, x0, std::lround(prev[i]), x1, std::lround(cur[i]), cm.entity_color(ds, t, i));
    prev = cur;
  }
  return img;
}

} // namespace motionorder
