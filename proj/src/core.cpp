#include "motionorder/core.hpp"
#include "motionorder/keyvalue.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace motionorder {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, const char* what, long line) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty())
    throw ParseError(std::string("cannot parse ") + what + " '" + std::string(field) + "'", line);
  return value;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Iterates non-empty lines with their 1-based numbers.
template <typename F>
void for_each_line(const std::string& text, F&& f) {
  long lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const std::string_view line(text.data() + start,
                                (end == std::string::npos ? text.size() : end) - start);
    ++lineno;
    if (!trim(line).empty()) f(line, lineno);
    if (end == std::string::npos) break;
    start = end + 1;
  }
}

std::size_t column_index(const std::vector<std::string_view>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("missing column '" + name + "' in header", 1);
  return static_cast<std::size_t>(it - header.begin());
}

} // namespace

TrajectoryDataset::TrajectoryDataset(std::vector<std::string> entity_ids, std::size_t num_frames,
                                     std::vector<Vec2> positions, std::optional<double> frame_rate,
                                     std::int64_t first_frame)
    : ids_(std::move(entity_ids)), num_frames_(num_frames), positions_(std::move(positions)),
      frame_rate_(frame_rate), first_frame_(first_frame) {
  if (ids_.empty() || num_frames_ == 0)
    throw ValidationError("dataset needs at least one entity and one frame");
  if (positions_.size() != ids_.size() * num_frames_)
    throw ValidationError("position count " + std::to_string(positions_.size()) +
                          " does not match " + std::to_string(num_frames_) + " frames x " +
                          std::to_string(ids_.size()) + " entities");
  for (std::size_t k = 0; k < positions_.size(); ++k) {
    const Vec2 p = positions_[k];
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw ValidationError("non-finite coordinate for entity '" + ids_[k % ids_.size()] +
                            "' at frame " +
                            std::to_string(first_frame_ + static_cast<std::int64_t>(k / ids_.size())));
    bounds_.extend(p);
  }
}

TrajectoryDataset TrajectoryDataset::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > num_frames_) throw ValidationError("invalid frame slice");
  const std::size_t n = ids_.size();
  std::vector<Vec2> pos(positions_.begin() + static_cast<std::ptrdiff_t>(begin * n),
                        positions_.begin() + static_cast<std::ptrdiff_t>(end * n));
  return {ids_, end - begin, std::move(pos), frame_rate_,
          first_frame_ + static_cast<std::int64_t>(begin)};
}

OrderingSummary::OrderingSummary(std::size_t num_frames, std::size_t num_entities,
                                 std::vector<Rank> ranks, std::string method_tag)
    : num_frames_(num_frames), num_entities_(num_entities), ranks_(std::move(ranks)),
      method_tag_(std::move(method_tag)) {
  if (ranks_.size() != num_frames_ * num_entities_)
    throw ValidationError("rank array has wrong size");
  for (std::size_t t = 0; t < num_frames_; ++t)
    if (!is_permutation_ranking(this->ranks(t)))
      throw ValidationError("ranks of frame " + std::to_string(t) + " are not a permutation");
}

OrderingSummary OrderingSummary::from_coords(std::size_t num_frames, std::size_t num_entities,
                                             std::vector<double> coords, std::string method_tag) {
  if (coords.size() != num_frames * num_entities)
    throw ValidationError("coordinate array has wrong size");
  std::vector<Rank> ranks;
  ranks.reserve(coords.size());
  for (std::size_t t = 0; t < num_frames; ++t) {
    const auto r = ranks_from_coords({coords.data() + t * num_entities, num_entities});
    ranks.insert(ranks.end(), r.begin(), r.end());
  }
  OrderingSummary out(num_frames, num_entities, std::move(ranks), std::move(method_tag));
  out.coords_ = std::move(coords);
  return out;
}

void OrderingSummary::attach_coords(std::vector<double> coords) {
  if (coords.size() != ranks_.size()) throw ValidationError("coordinate array has wrong size");
  for (std::size_t t = 0; t < num_frames_; ++t) {
    const auto r = ranks_from_coords({coords.data() + t * num_entities_, num_entities_});
    if (!std::equal(r.begin(), r.end(), ranks(t).begin()))
      throw ValidationError("coordinates of frame " + std::to_string(t) +
                            " do not reproduce the ranks");
  }
  coords_ = std::move(coords);
}

std::vector<std::size_t> OrderingSummary::sequence(std::size_t t) const {
  std::vector<std::size_t> seq(num_entities_);
  const auto r = ranks(t);
  for (std::size_t i = 0; i < num_entities_; ++i) seq[static_cast<std::size_t>(r[i])] = i;
  return seq;
}

std::vector<Rank> ranks_from_sequence(std::span<const std::size_t> sequence) {
  std::vector<Rank> ranks(sequence.size());
  for (std::size_t r = 0; r < sequence.size(); ++r) ranks[sequence[r]] = static_cast<Rank>(r);
  return ranks;
}

std::vector<Rank> ranks_from_coords(std::span<const double> coords) {
  std::vector<std::size_t> idx(coords.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return coords[a] < coords[b]; });
  return ranks_from_sequence(idx);
}

std::vector<Rank> ranks_from_keys(std::span<const std::uint64_t> keys) {
  std::vector<std::size_t> idx(keys.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return ranks_from_sequence(idx);
}

bool is_permutation_ranking(std::span<const Rank> ranks) {
  std::vector<char> seen(ranks.size(), 0);
  for (Rank r : ranks) {
    if (r < 0 || static_cast<std::size_t>(r) >= ranks.size() || seen[static_cast<std::size_t>(r)])
      return false;
    seen[static_cast<std::size_t>(r)] = 1;
  }
  return true;
}

TrajectoryDataset parse_csv(const std::string& text, const CsvSchema& schema) {
  struct Row {
    std::int64_t frame;
    std::size_t entity;
    Vec2 pos;
    long line;
  };
  std::vector<Row> rows;
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> id_index;
  std::size_t cf = 0, ci = 0, cx = 0, cy = 0, ncols = 0;
  bool have_header = false;

  for_each_line(text, [&](std::string_view line, long lineno) {
    const auto fields = split_fields(line);
    if (!have_header) {
      cf = column_index(fields, schema.frame);
      ci = column_index(fields, schema.id);
      cx = column_index(fields, schema.x);
      cy = column_index(fields, schema.y);
      ncols = fields.size();
      have_header = true;
      return;
    }
    if (fields.size() != ncols)
      throw ParseError("expected " + std::to_string(ncols) + " fields, got " +
                       std::to_string(fields.size()),
                       lineno);
    Row row{};
    row.frame = parse_number<std::int64_t>(fields[cf], "frame index", lineno);
    const std::string id(fields[ci]);
    if (id.empty()) throw ParseError("empty entity id", lineno);
    row.pos.x = parse_number<double>(fields[cx], "x coordinate", lineno);
    row.pos.y = parse_number<double>(fields[cy], "y coordinate", lineno);
    if (!std::isfinite(row.pos.x) || !std::isfinite(row.pos.y))
      throw ValidationError("line " + std::to_string(lineno) + ": non-finite coordinate for '" +
                            id + "'");
    const auto [it, inserted] = id_index.try_emplace(id, ids.size());
    if (inserted) ids.push_back(id);
    row.entity = it->second;
    row.line = lineno;
    rows.push_back(row);
  });

  if (!have_header) throw ParseError("empty file", 1);
  if (rows.empty()) throw ValidationError("no data rows");

  std::int64_t lo = rows.front().frame, hi = rows.front().frame;
  for (const auto& r : rows) {
    lo = std::min(lo, r.frame);
    hi = std::max(hi, r.frame);
  }
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::size_t n = ids.size();
  if (span > rows.size()) {
    std::vector<std::int64_t> frames;
    for (const auto& r : rows) frames.push_back(r.frame);
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    for (std::size_t k = 1; k < frames.size(); ++k)
      if (frames[k] != frames[k - 1] + 1)
        throw IntegrityError("frame indices not contiguous: frame " +
                             std::to_string(frames[k - 1] + 1) + " is missing");
  }
  const std::size_t T = static_cast<std::size_t>(span);

  std::vector<Vec2> positions(T * n);
  std::vector<char> filled(T * n, 0);
  for (const auto& r : rows) {
    const std::size_t k = static_cast<std::size_t>(r.frame - lo) * n + r.entity;
    if (filled[k])
      throw IntegrityError("duplicate row for frame " + std::to_string(r.frame) + ", entity '" +
                           ids[r.entity] + "' (line " + std::to_string(r.line) + ")");
    filled[k] = 1;
    positions[k] = r.pos;
  }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i)
      if (!filled[t * n + i])
        throw IntegrityError("entity '" + ids[i] + "' missing at frame " +
                             std::to_string(lo + static_cast<std::int64_t>(t)));
  return {std::move(ids), T, std::move(positions), std::nullopt, lo};
}

TrajectoryDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  return parse_csv(read_file(path), schema);
}

std::string format_csv(const TrajectoryDataset& ds) {
  std::string out = "frame,id,x,y\n";
  const auto& ids = ds.entity_ids();
  for (std::size_t t = 0; t < ds.num_frames(); ++t) {
    const std::string frame = std::to_string(ds.first_frame() + static_cast<std::int64_t>(t));
    const auto pts = ds.frame(t);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out += frame;
      out += ',';
      out += ids[i];
      out += ',';
      out += format_double(pts[i].x);
      out += ',';
      out += format_double(pts[i].y);
      out += '\n';
    }
  }
  return out;
}

void save_csv(const TrajectoryDataset& ds, const std::filesystem::path& path) {
  write_file(path, format_csv(ds));
}

namespace {
void check_shape(const TrajectoryDataset& ds, const OrderingSummary& ord) {
  if (ord.num_frames() != ds.num_frames() || ord.num_entities() != ds.num_entities())
    throw ValidationError("ordering shape does not match dataset");
}
} // namespace

void save_ordering_csv(const TrajectoryDataset& ds, const OrderingSummary& ord,
                       const std::filesystem::path& path) {
  check_shape(ds, ord);
  std::string out = "frame,rank,id\n";
  for (std::size_t t = 0; t < ds.num_frames(); ++t) {
    const std::string frame = std::to_string(ds.first_frame() + static_cast<std::int64_t>(t));
    const auto seq = ord.sequence(t);
    for (std::size_t r = 0; r < seq.size(); ++r)
      out += frame + ',' + std::to_string(r) + ',' + ds.entity_ids()[seq[r]] + '\n';
  }
  write_file(path, out);
}

void save_coords_csv(const TrajectoryDataset& ds, const OrderingSummary& ord,
                     const std::filesystem::path& path) {
  check_shape(ds, ord);
  if (!ord.has_coords()) throw ContractError("ordering carries no 1D coordinates");
  std::string out = "frame,id,coord\n";
  for (std::size_t t = 0; t < ds.num_frames(); ++t) {
    const std::string frame = std::to_string(ds.first_frame() + static_cast<std::int64_t>(t));
    const auto c = ord.coords(t);
    for (std::size_t i = 0; i < c.size(); ++i)
      out += frame + ',' + ds.entity_ids()[i] + ',' + format_double(c[i]) + '\n';
  }
  write_file(path, out);
}

OrderingSummary load_ordering_csv(const TrajectoryDataset& ds, const std::filesystem::path& path,
                                  const std::optional<std::filesystem::path>& coords_path) {
  const std::size_t n = ds.num_entities(), T = ds.num_frames();
  std::unordered_map<std::string, std::size_t> id_index;
  for (std::size_t i = 0; i < n; ++i) id_index.emplace(ds.entity_ids()[i], i);

  auto locate = [&](std::string_view frame_f, std::string_view id_f, long lineno) {
    const auto frame = parse_number<std::int64_t>(frame_f, "frame index", lineno);
    const auto t = frame - ds.first_frame();
    if (t < 0 || static_cast<std::size_t>(t) >= T)
      throw IntegrityError("frame " + std::to_string(frame) + " not in dataset (line " +
                           std::to_string(lineno) + ")");
    const auto it = id_index.find(std::string(id_f));
    if (it == id_index.end())
      throw IntegrityError("unknown entity '" + std::string(id_f) + "' (line " +
                           std::to_string(lineno) + ")");
    return static_cast<std::size_t>(t) * n + it->second;
  };

  std::vector<Rank> ranks(T * n, -1);
  bool header = true;
  std::size_t cf = 0, cr = 0, ci = 0;
  for_each_line(read_file(path), [&](std::string_view line, long lineno) {
    const auto f = split_fields(line);
    if (header) {
      cf = column_index(f, "frame");
      cr = column_index(f, "rank");
      ci = column_index(f, "id");
      header = false;
      return;
    }
    if (f.size() < 3) throw ParseError("expected frame,rank,id", lineno);
    const auto k = locate(f[cf], f[ci], lineno);
    if (ranks[k] != -1) throw IntegrityError("duplicate rank row (line " + std::to_string(lineno) + ")");
    ranks[k] = parse_number<Rank>(f[cr], "rank", lineno);
  });
  if (std::find(ranks.begin(), ranks.end(), -1) != ranks.end())
    throw IntegrityError("ordering file does not cover every (frame, entity)");
  OrderingSummary ord(T, n, std::move(ranks), path.stem().string());

  if (coords_path) {
    std::vector<double> coords(T * n, std::numeric_limits<double>::quiet_NaN());
    header = true;
    std::size_t cc = 0;
    for_each_line(read_file(*coords_path), [&](std::string_view line, long lineno) {
      const auto f = split_fields(line);
      if (header) {
        cf = column_index(f, "frame");
        ci = column_index(f, "id");
        cc = column_index(f, "coord");
        header = false;
        return;
      }
      if (f.size() < 3) throw ParseError("expected frame,id,coord", lineno);
      coords[locate(f[cf], f[ci], lineno)] = parse_number<double>(f[cc], "coordinate", lineno);
    });
    for (double c : coords)
      if (!std::isfinite(c)) throw IntegrityError("coordinate file incomplete or non-finite");
    ord.attach_coords(std::move(coords));
  }
  return ord;
}

TrajectoryDataset normalize(const TrajectoryDataset& ds) {
  const BoundingBox& b = ds.bounds();
  const double extent = std::max(b.width(), b.height());
  if (!(extent > 0.0)) throw DegenerateInputError("all positions coincide; cannot normalize");
  const double s = 1.0 / extent;
  const double off_x = 0.5 * (1.0 - b.width() * s);
  const double off_y = 0.5 * (1.0 - b.height() * s);
  std::vector<Vec2> pos;
  pos.reserve(ds.positions().size());
  for (Vec2 p : ds.positions()) pos.push_back({(p.x - b.min_x) * s + off_x, (p.y - b.min_y) * s + off_y});
  return {ds.entity_ids(), ds.num_frames(), std::move(pos), ds.frame_rate(), ds.first_frame()};
}

OrderingSummary fxd_order(const TrajectoryDataset& ds) {
  const std::size_t n = ds.num_entities();
  std::vector<Rank> ranks(ds.num_frames() * n);
  for (std::size_t k = 0; k < ranks.size(); ++k) ranks[k] = static_cast<Rank>(k % n);
  return {ds.num_frames(), n, std::move(ranks), "fxd"};
}

} // namespace motionorder
