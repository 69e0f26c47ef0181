#include "doctest.h"
#include "helpers.hpp"

#include "motionorder/dimred.hpp"

#include <cmath>

using namespace motionorder;

namespace {

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double scale = 0.0, worst = 0.0;
  for (double v : numeric) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / std::max(scale, 1e-300));
  return worst;
}

template <typename Cost>
std::vector<double> central_differences(std::vector<double> x, Cost&& cost, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = cost(x);
    x[i] = keep - h;
    const double down = cost(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<double> random_line(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

} // namespace

TEST_SUITE("embed") {

TEST_CASE("sammon cost vanishes on an isometric embedding") {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {3, 0}, {7, 0}};
  const auto d = sammon_distances(pts, 1);
  const std::vector<double> x{0, 1, 3, 7};
  CHECK(sammon_cost(d, x) == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<double> g(4);
  sammon_gradient(d, x, g);
  for (double v : g) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("sammon cost of an equilateral triangle on a line") {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}};
  const auto d = sammon_distances(pts, 1);
  const std::vector<double> x{0, 1, 0.5};
  CHECK(sammon_cost(d, x) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("sammon gradient matches central differences") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = testing::random_frame(rng, 10);
    const auto d = sammon_distances(pts, trial);
    const auto x = random_line(rng, 10);
    std::vector<double> g(10);
    sammon_gradient(d, x, g);
    const auto fd = central_differences(x, [&](const std::vector<double>& y) { return sammon_cost(d, y); });
    CHECK(max_relative_error(g, fd) < 1e-4);
  }
}

TEST_CASE("sammon descent never raises the cost") {
  std::mt19937_64 rng(102);
  const auto pts = testing::random_frame(rng, 30);
  const auto d = sammon_distances(pts, 5);
  auto x = random_line(rng, 30);
  const double start = sammon_cost(d, x);
  SammonConfig cfg;
  cfg.iterations = 100;
  const auto res = sammon_descent(d, x, cfg);
  REQUIRE_FALSE(res.accepted_costs.empty());
  CHECK(res.accepted_costs.front() <= start);
  for (std::size_t i = 1; i < res.accepted_costs.size(); ++i)
    CHECK(res.accepted_costs[i] <= res.accepted_costs[i - 1]);
  CHECK(res.cost == doctest::Approx(sammon_cost(d, x)).epsilon(1e-12));
}

TEST_CASE("sammon handles coincident points") {
  const std::vector<Vec2> pts{{1, 1}, {1, 1}, {2, 3}, {5, 1}};
  const auto d = sammon_distances(pts, 9);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) CHECK(d[i * 4 + j] > 0.0);
  const auto ds = testing::dataset_from_frames({pts, pts});
  SammonConfig cfg;
  cfg.iterations = 50;
  const auto emb = sammon_embed(ds, cfg);
  for (double v : emb.coords) CHECK(std::isfinite(v));
}

TEST_CASE("t-SNE joint affinities form a symmetric distribution") {
  std::mt19937_64 rng(103);
  for (std::size_t n : {3, 10, 50}) {
    const auto pts = testing::random_frame(rng, n);
    const auto P = tsne_joint(tsne_conditional(pts, std::min(40.0, n - 1.0)));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(P[i * n + i] == 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(P[i * n + j] >= 0.0);
        CHECK(P[i * n + j] == P[j * n + i]);
        sum += P[i * n + j];
      }
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("t-SNE with two points has certain conditionals") {
  const std::vector<Vec2> pts{{0, 0}, {3, 4}};
  const auto c = tsne_conditional(pts, 1.0);
  CHECK(c.p[1] == doctest::Approx(1.0));
  CHECK(c.p[2] == doctest::Approx(1.0));
}

TEST_CASE("t-SNE bandwidth search hits the target perplexity") {
  std::mt19937_64 rng(104);
  for (int trial = 0; trial < 5; ++trial) {
    const auto pts = testing::random_frame(rng, 50);
    const auto c = tsne_conditional(pts, 40.0);
    CHECK(c.unconverged == 0);
    for (double perp : c.perplexity) CHECK(std::abs(perp - 40.0) <= 40e-3);
  }
}

TEST_CASE("t-SNE gradient matches central differences") {
  std::mt19937_64 rng(105);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = testing::random_frame(rng, 12);
    const auto P = tsne_joint(tsne_conditional(pts, 5.0));
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<double> y(12);
    for (auto& v : y) v = u(rng);
    std::vector<double> g(12);
    tsne_gradient(P, y, g);
    const auto fd = central_differences(y, [&](const std::vector<double>& z) { return tsne_cost(P, z); });
    CHECK(max_relative_error(g, fd) < 1e-4);
  }
}

TEST_CASE("t-SNE rejects perplexity not below n") {
  const auto ds = testing::random_dataset(5, 10, 2);
  TsneConfig cfg;
  cfg.perplexity = 10.0;
  CHECK_THROWS_AS(tsne_embed(ds, cfg), ValidationError);
}

TEST_CASE("embeddings are identical in serial and parallel") {
  const auto ds = testing::random_dataset(106, 80, 4);
  SammonConfig sc;
  sc.iterations = 40;
  for (auto init : {EmbedInit::random, EmbedInit::previous_frame}) {
    sc.init = init;
    const auto a = sammon_embed(ds, sc, Exec::serial), b = sammon_embed(ds, sc, Exec::parallel);
    CHECK(a.coords == b.coords);
    CHECK(a.final_cost == b.final_cost);
  }
  TsneConfig tc;
  tc.perplexity = 20.0;
  tc.iterations = 60;
  for (auto init : {EmbedInit::random, EmbedInit::previous_frame}) {
    tc.init = init;
    const auto a = tsne_embed(ds, tc, Exec::serial), b = tsne_embed(ds, tc, Exec::parallel);
    CHECK(a.coords == b.coords);
  }
}

TEST_CASE("embeddings are seeded") {
  const auto ds = testing::random_dataset(107, 20, 3);
  SammonConfig sc;
  sc.iterations = 20;
  const auto a = sammon_embed(ds, sc);
  CHECK(sammon_embed(ds, sc).coords == a.coords);
  sc.seed = 2;
  CHECK(sammon_embed(ds, sc).coords != a.coords);
  CHECK(frame_seed(1, 0) != frame_seed(1, 1));
  CHECK(a.to_ordering("sam").num_frames() == 3);
}

} // TEST_SUITE
