#include "doctest.h"
#include "helpers.hpp"

#include "motionorder/datagen.hpp"
#include "motionorder/dimred.hpp"
#include "motionorder/metrics.hpp"
#include "motionorder/render.hpp"
#include "motionorder/spatial.hpp"

#include <limits>
#include <set>

using namespace motionorder;

namespace {

Colormap2D unit_map() { return Colormap2D{}; }

} // namespace

TEST_SUITE("render") {

TEST_CASE("colormap corners, centre and clamping") {
  const auto cm = unit_map();
  CHECK(cm({0, 1}) == cm.nw);
  CHECK(cm({1, 1}) == cm.ne);
  CHECK(cm({0, 0}) == cm.sw);
  CHECK(cm({1, 0}) == cm.se);
  const Rgb mid = cm({0.5, 0.5});
  CHECK(mid.r == std::lround((0 + 255 + 30 + 220) / 4.0));
  CHECK(mid.g == std::lround((128 + 220 + 60 + 40) / 4.0));
  CHECK(mid.b == std::lround((128 + 0 + 255 + 40) / 4.0));
  CHECK(cm({-5, 7}) == cm.nw);
  CHECK(cm({3, -2}) == cm.se);
  CHECK(cm({0.5, 9}) == cm({0.5, 1}));
}

TEST_CASE("colormap validation and modes") {
  Colormap2D cm;
  cm.box = {0, 0, 0, 1};
  CHECK_THROWS_AS(cm.validate(), ValidationError);
  CHECK(parse_color_mode("reference") == ColorMode::reference);
  CHECK_THROWS_AS(parse_color_mode("hsv"), ValidationError);
  const TrajectoryDataset ds({"a"}, 2, {{0, 1}, {1, 0}});
  cm = Colormap2D::for_dataset(ds);
  cm.mode = ColorMode::reference;
  cm.reference_frame = 0;
  CHECK(cm.entity_color(ds, 1, 0) == cm.nw);
  cm.reference_frame = 5;
  CHECK_THROWS_AS(cm.entity_color(ds, 1, 0), ValidationError);
  CHECK(Colormap2D{}.describe().find("mode=frame") != std::string::npos);
}

TEST_CASE("minimal rug") {
  // Frame 0: a at NW, b at SE; frame 1 swaps positions and ranks.
  const TrajectoryDataset ds({"a", "b"}, 2, {{0, 1}, {1, 0}, {1, 0}, {0, 1}});
  const OrderingSummary ord(2, 2, {0, 1, 1, 0});
  const auto cm = Colormap2D::for_dataset(ds);
  const auto img = render_rug(ds, ord, cm);
  REQUIRE(img.width() == 2);
  REQUIRE(img.height() == 2);
  CHECK(img.at(0, 0) == cm.nw);
  CHECK(img.at(0, 1) == cm.se);
  CHECK(img.at(1, 0) == cm.nw); // b (now at NW) ranked first
  CHECK(img.at(1, 1) == cm.se);
}

TEST_CASE("rug dimensions scale with frames and entities") {
  const auto ds = testing::random_dataset(301, 7, 5);
  const auto img = render_rug(ds, fxd_order(ds), Colormap2D::for_dataset(ds), 3);
  CHECK(img.width() == 15);
  CHECK(img.height() == 21);
  CHECK(render_rug(ds, fxd_order(ds), Colormap2D::for_dataset(ds), 3, Exec::serial) == img);
  CHECK_THROWS_AS(render_rug(ds, fxd_order(ds), Colormap2D::for_dataset(ds), 0), ValidationError);
}

TEST_CASE("static data under a fixed order gives identical columns") {
  std::mt19937_64 rng(302);
  const auto frame = testing::random_frame(rng, 12);
  const auto ds = testing::dataset_from_frames({frame, frame, frame, frame});
  const auto img = render_rug(ds, fxd_order(ds), Colormap2D::for_dataset(ds));
  for (std::size_t x = 1; x < img.width(); ++x)
    for (std::size_t y = 0; y < img.height(); ++y) CHECK(img.at(x, y) == img.at(0, y));
}

TEST_CASE("oversized images raise size errors") {
  CHECK_THROWS_AS(Image(std::size_t{1} << 21, 1), SizeError);
  CHECK_THROWS_AS(Image(std::size_t{1} << 20, std::size_t{1} << 12), SizeError);
  const auto ds = testing::random_dataset(303, 3, 2);
  CHECK_THROWS_AS(render_rug(ds, fxd_order(ds), Colormap2D::for_dataset(ds), std::size_t{1} << 20), SizeError);
}

TEST_CASE("metric strip bars") {
  const std::vector<double> zeros(4, 0.0);
  const auto blank = render_metric_strip(zeros, 10.0, 11, 4);
  for (std::size_t x = 0; x < 4; ++x) {
    for (std::size_t y = 0; y < 10; ++y) CHECK(blank.at(x, y) == Rgb{255, 255, 255});
    CHECK(blank.at(x, 10) != Rgb{255, 255, 255});
  }
  const std::vector<double> v{100.0, 5.0};
  const auto img = render_metric_strip(v, 10.0, 11, 3, 1, kKsteColor);
  CHECK(img.width() == 3);
  CHECK(img.at(0, 5) == Rgb{255, 255, 255}); // padding column on the left
  for (std::size_t y = 0; y < 10; ++y) CHECK(img.at(1, y) == kKsteColor); // clamped at full height
  CHECK(img.at(2, 4) == Rgb{255, 255, 255});
  CHECK(img.at(2, 5) == kKsteColor);
  CHECK_THROWS_AS(render_metric_strip(v, 0.0, 11, 3), ValidationError);
}

TEST_CASE("transition strip lines up with the rug") {
  const auto ds = testing::random_dataset(304, 6, 9);
  const std::vector<double> transitions(8, 1.0);
  const auto rug = render_rug(ds, fxd_order(ds), Colormap2D::for_dataset(ds), 2);
  CHECK(render_metric_strip(transitions, kKsteCap, 30, 9, 2).width() == rug.width());
}

TEST_CASE("heat rug brightness") {
  const OrderingSummary ord(3, 4, {0, 1, 2, 3, 3, 2, 1, 0, 0, 1, 2, 3});
  const std::vector<double> equal(12, 0.7);
  const auto flat = render_heat_rug(ord, equal);
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t y = 0; y < 4; ++y) CHECK(flat.at(x, y) == kKsdiColor);

  std::vector<double> spike(12, 0.0);
  spike[1 * 4 + 2] = 5.0; // frame 1, entity 2 (rank 1)
  const auto img = render_heat_rug(ord, spike);
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t y = 0; y < 4; ++y) {
      const bool hot = x == 1 && y == 1;
      CHECK(img.at(x, y) == (hot ? kKsdiColor : Rgb{0, 0, 0}));
    }
  const std::vector<double> negative(12, -1.0);
  CHECK(render_heat_rug(ord, negative).at(0, 0) == Rgb{0, 0, 0});
}

TEST_CASE("fixed order on static data leaves the stability heat rug dark") {
  std::mt19937_64 rng(305);
  const auto frame = testing::random_frame(rng, 10);
  const auto ds = testing::dataset_from_frames({frame, frame, frame});
  const auto ord = fxd_order(ds);
  const auto img = render_heat_rug(ord, kste_contribution_table(ord), 1, kKsteColor);
  for (std::size_t x = 0; x < img.width(); ++x)
    for (std::size_t y = 0; y < img.height(); ++y) CHECK(img.at(x, y) == Rgb{0, 0, 0});
}

TEST_CASE("motion lines for constant coordinates are horizontal") {
  const TrajectoryDataset ds({"a", "b"}, 5, {{0, 0}, {1, 0}, {0, 0}, {1, 0}, {0, 0}, {1, 0}, {0, 0}, {1, 0}, {0, 0}, {1, 0}});
  auto ord = OrderingSummary::from_coords(5, 2, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
  const MotionLinesLayout layout{40, 4, 4};
  const auto rows = motionline_rows(ord, 2, layout);
  CHECK(rows[0] == 4.0);
  CHECK(rows[1] == 35.0);
  const auto img = render_motionlines(ds, ord, Colormap2D::for_dataset(ds), layout);
  CHECK(img.width() == 20);
  const Rgb white{255, 255, 255};
  for (std::size_t x = 2; x <= 18; ++x) {
    CHECK(img.at(x, 4) != white);
    CHECK(img.at(x, 35) != white);
    CHECK(img.at(x, 20) == white);
  }
}

TEST_CASE("motion lines need coordinates") {
  const auto ds = testing::random_dataset(306, 5, 3);
  const auto hil = hilbert_order(ds, GridDiscretization{});
  CHECK_THROWS_AS(render_motionlines(ds, hil, Colormap2D::for_dataset(ds)), ContractError);
  CHECK_THROWS_AS(motionline_rows(hil, 0, {}), ContractError);
}

TEST_CASE("clustered ordering draws separated bands") {
  BoidsConfig cfg;
  cfg.frames = 60;
  cfg.seed = 3;
  const auto ds = gen_reynolds_clusters(cfg);
  const auto res = cpc_run(ds, {{0.5}, 2.0});
  std::size_t separated = 0;
  for (std::size_t t = 0; t < ds.num_frames(); ++t) {
    const auto rows = motionline_rows(res.ordering, t, {});
    std::vector<std::size_t> part_of(ds.num_entities());
    for (std::size_t k = 0; k < res.partitions[t].size(); ++k)
      for (auto e : res.partitions[t][k]) part_of[e] = k;
    const auto seq = res.ordering.sequence(t);
    double intra = 0.0, inter = std::numeric_limits<double>::infinity();
    for (std::size_t r = 1; r < seq.size(); ++r) {
      const double gap = rows[seq[r]] - rows[seq[r - 1]];
      if (part_of[seq[r]] == part_of[seq[r - 1]]) intra = std::max(intra, gap);
      else inter = std::min(inter, gap);
    }
    if (inter > intra) ++separated;
  }
  CHECK(static_cast<double>(separated) >= 0.8 * static_cast<double>(ds.num_frames()));
}

TEST_CASE("png round trip and determinism") {
  const auto ds = testing::random_dataset(307, 9, 6);
  const auto img = render_rug(ds, fxd_order(ds), Colormap2D::for_dataset(ds), 2);
  const TextChunks text{{"Software", "motionorder"}};
  const auto bytes = encode_png(img, text);
  CHECK(bytes == encode_png(img, text));
  CHECK(decode_png(bytes) == img);
  const std::string raw(bytes.begin(), bytes.end());
  CHECK(raw.find("motionorder") != std::string::npos);
  const auto dir = testing::scratch_dir("render_png");
  write_png(img, dir / "r.png", text);
  CHECK(std::filesystem::file_size(dir / "r.png") == bytes.size());
  CHECK_THROWS_AS(decode_png({1, 2, 3}), Error);
}

} // TEST_SUITE
