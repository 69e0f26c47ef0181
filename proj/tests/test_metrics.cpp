#include "doctest.h"
#include "helpers.hpp"

#include "motionorder/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace motionorder;

namespace {

// Independent direct-sum evaluations.
std::vector<std::size_t> oracle_knn(std::span<const Vec2> pts, std::size_t i, std::size_t k) {
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < pts.size(); ++j)
    if (j != i) others.push_back(j);
  std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    return squared_distance(pts[i], pts[a]) < squared_distance(pts[i], pts[b]);
  });
  others.resize(std::min(k, others.size()));
  return others;
}

double tie(long d) { return 2.0 * static_cast<double>(std::labs(d)) - 1.0; }

double oracle_ksra(std::span<const Vec2> pts, std::span<const Rank> r, std::size_t k) {
  double sum = 0.0, h = 0.0;
  for (std::size_t j = 1; j <= k; ++j) h += 1.0 / static_cast<double>(j);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto nb = oracle_knn(pts, i, k);
    for (std::size_t j = 0; j < nb.size(); ++j) sum += tie(r[i] - r[nb[j]]) / static_cast<double>(j + 1);
  }
  return sum / (static_cast<double>(pts.size()) * h);
}

double oracle_ksdi(std::span<const Vec2> pts, std::span<const Rank> r, std::size_t k) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j : oracle_knn(pts, i, k)) {
      const double w = 1.0 / distance(pts[i], pts[j]);
      num += w * tie(r[i] - r[j]);
      den += w;
    }
  return num / den;
}

double oracle_kste(std::span<const Rank> prev, std::span<const Rank> next, std::size_t k) {
  const std::size_t n = prev.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    std::sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
      const long da = std::labs(prev[a] - prev[i]), db = std::labs(prev[b] - prev[i]);
      return da != db ? da < db : prev[a] < prev[b];
    });
    others.resize(std::min(k, others.size()));
    for (std::size_t j : others) {
      const double w = 1.0 / tie(prev[i] - prev[j]);
      num += w * tie(next[i] - next[j]);
      den += w;
    }
  }
  return num / den;
}

long oracle_crossings(std::span<const Rank> a, std::span<const Rank> b) {
  long c = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if ((a[i] < a[j]) != (b[i] < b[j])) ++c;
  return c;
}

std::vector<Rank> identity(std::size_t n) {
  std::vector<Rank> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

std::vector<Rank> reversal(std::size_t n) {
  std::vector<Rank> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<Rank>(n - 1 - i);
  return r;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("tie rank values") {
  CHECK(tie_rank_value(1) == 1);
  CHECK(tie_rank_value(2) == 3);
  CHECK(tie_rank_value(5) == 9);
  CHECK_THROWS_AS(tie_rank_value(0), DomainError);
}

TEST_CASE("harmonic numbers and neighbour clamping") {
  CHECK(harmonic_number(2) == 1.5);
  CHECK(harmonic_number(1) == 1.0);
  NeighborSpec spec{10};
  CHECK(spec.effective_k(5) == 4);
  CHECK(spec.clamp_warning(5).has_value());
  CHECK_FALSE(spec.clamp_warning(50).has_value());
  CHECK_THROWS_AS(NeighborSpec{0}.effective_k(5), ValidationError);
}

TEST_CASE("hand-evaluated keys similarity on three collinear points") {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {3, 0}};
  const auto id = identity(3);
  CHECK(ksra(pts, id, {2}) == doctest::Approx(13.0 / 9.0).epsilon(1e-15));
  CHECK(ksdi(pts, id, {2}) == doctest::Approx(15.0 / 11.0).epsilon(1e-15));
  CHECK(kste(id, id, {2}) == doctest::Approx(9.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("perfect line order with one neighbour scores one") {
  const std::vector<Vec2> pts{{5, 0}, {0, 0}, {2, 0}, {9, 0}};
  const std::vector<Rank> r{2, 0, 1, 3};
  CHECK(ksra(pts, r, {1}) == 1.0);
  CHECK(ksdi(pts, r, {1}) == 1.0);
}

TEST_CASE("keys similarity equals direct-sum oracles") {
  std::mt19937_64 rng(201);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 30);
    const std::size_t k = 1 + static_cast<std::size_t>(trial % 12);
    const auto pts = testing::random_frame(rng, n);
    const auto a = testing::random_permutation(rng, n), b = testing::random_permutation(rng, n);
    const std::size_t ke = std::min(k, n - 1);
    CHECK(std::abs(ksra(pts, a, {k}) - oracle_ksra(pts, a, ke)) < 1e-12);
    CHECK(std::abs(ksdi(pts, a, {k}) - oracle_ksdi(pts, a, ke)) < 1e-12);
    CHECK(std::abs(kste(a, b, {k}) - oracle_kste(a, b, ke)) < 1e-12);
  }
}

TEST_CASE("jump distance examples") {
  const auto id = identity(4);
  CHECK(jmp(id, id) == 0);
  CHECK(jmp(id, std::vector<Rank>{1, 0, 3, 2}) == 4);
  CHECK(jmp(id, reversal(4)) == 8);
  CHECK_THROWS_AS(jmp(id, identity(3)), DomainError);
}

TEST_CASE("crossings equal the quadratic pair count") {
  const auto id = identity(4);
  CHECK(crs(id, id) == 0);
  CHECK(crs(id, reversal(4)) == 6);
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 64);
    const auto a = testing::random_permutation(rng, n), b = testing::random_permutation(rng, n);
    const long c = static_cast<long>(crs(a, b));
    REQUIRE(c == oracle_crossings(a, b));
    CHECK(c == static_cast<long>(crs(b, a)));
    CHECK(c <= static_cast<long>(n * (n - 1) / 2));
    if (c == 0) CHECK(jmp(a, b) == 0);
    if (c > 0) CHECK(jmp(a, b) > 0);
  }
}

TEST_CASE("kendall tau identity") {
  const auto id = identity(4);
  CHECK(kendall_tau(id, id) == 1.0);
  CHECK(kendall_tau(id, reversal(4)) == -1.0);
  const std::vector<Rank> three{2, 1, 0, 3}; // crossings: 3
  REQUIRE(crs(id, three) == 3);
  CHECK(kendall_tau(id, three) == 0.0);
  std::mt19937_64 rng(203);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 50);
    const auto a = testing::random_permutation(rng, n), b = testing::random_permutation(rng, n);
    const double pairs = static_cast<double>(n * (n - 1) / 2);
    CHECK(kendall_tau(a, b) == 1.0 - 2.0 * static_cast<double>(crs(a, b)) / pairs);
  }
  CHECK_THROWS_AS(kendall_tau(identity(1), identity(1)), DomainError);
}

TEST_CASE("unchanged order minimises temporal keys similarity") {
  for (std::size_t n = 2; n <= 6; ++n) {
    for (std::size_t k = 1; k < n; ++k) {
      const auto prev = identity(n);
      auto next = identity(n);
      double best = std::numeric_limits<double>::infinity();
      do {
        best = std::min(best, kste(prev, next, {k}));
      } while (std::next_permutation(next.begin(), next.end()));
      CHECK(kste(prev, prev, {k}) == doctest::Approx(best).epsilon(1e-15));
      CHECK(kste(prev, reversal(n), {k}) == doctest::Approx(kste(prev, prev, {k})).epsilon(1e-15));
    }
  }
}

TEST_CASE("contributions sum to the excess") {
  std::mt19937_64 rng(204);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial);
    const auto pts = testing::random_frame(rng, n);
    const auto a = testing::random_permutation(rng, n), b = testing::random_permutation(rng, n);
    const auto nb = FrameNeighbors::compute(pts, 4);
    const auto cd = ksdi_contributions(nb, a);
    CHECK(std::accumulate(cd.begin(), cd.end(), 0.0) == doctest::Approx(ksdi(nb, a) - 1.0).epsilon(1e-12));
    const auto ct = kste_contributions(a, b, {4});
    CHECK(std::accumulate(ct.begin(), ct.end(), 0.0) ==
          doctest::Approx(kste(a, b, {4}) - kste(a, a, {4})).epsilon(1e-12));
    for (double v : kste_contributions(a, a, {4})) CHECK(v == 0.0);
  }
}

TEST_CASE("spatial metrics are invariant to similarity transforms") {
  std::mt19937_64 rng(205);
  const auto pts = testing::random_frame(rng, 40);
  const auto r = testing::random_permutation(rng, 40);
  std::vector<Vec2> moved;
  for (Vec2 p : pts) moved.push_back(2.0 * rotate(p, 0.7) + Vec2{13, -4});
  CHECK(ksra(pts, r) == doctest::Approx(ksra(moved, r)).epsilon(1e-12));
  CHECK(ksdi(pts, r) == doctest::Approx(ksdi(moved, r)).epsilon(1e-12));
}

TEST_CASE("coincident neighbours keep KSdi finite") {
  const std::vector<Vec2> pts{{0, 0}, {0, 0}, {1, 0}};
  const auto v = ksdi(pts, identity(3), {2});
  CHECK(std::isfinite(v));
  CHECK(v >= 1.0);
}

TEST_CASE("fixed order evaluation") {
  const auto ds = testing::random_dataset(206, 25, 15);
  const auto series = evaluate(ds, fxd_order(ds), {5});
  REQUIRE(series.size() == 5);
  for (std::size_t m = 0; m < 5; ++m) CHECK(series[m].name == kMetricNames[m]);
  CHECK(series[0].values.size() == 15);
  CHECK(series[2].values.size() == 14);
  for (double v : series[2].values) CHECK(v == 0.0);
  for (double v : series[3].values) CHECK(v == 0.0);
  const double floor = kste(identity(25), identity(25), {5});
  for (double v : series[4].values) CHECK(v == floor);
  for (const auto& s : series) {
    const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / s.values.size();
    CHECK(std::abs(s.summary.mean - mean) < 1e-12);
    CHECK(s.summary.max == *std::max_element(s.values.begin(), s.values.end()));
    CHECK(s.summary.min == *std::min_element(s.values.begin(), s.values.end()));
  }
}

TEST_CASE("single frame has no transitions") {
  const auto ds = testing::random_dataset(207, 6, 1);
  const auto series = evaluate(ds, fxd_order(ds));
  CHECK(series[0].values.size() == 1);
  CHECK(series[2].values.empty());
  CHECK(std::isnan(series[2].summary.mean));
}

TEST_CASE("evaluation is exec-independent and accepts cached neighbours") {
  const auto ds = testing::random_dataset(208, 40, 20);
  std::mt19937_64 rng(1);
  std::vector<Rank> ranks;
  for (std::size_t t = 0; t < 20; ++t) {
    const auto p = testing::random_permutation(rng, 40);
    ranks.insert(ranks.end(), p.begin(), p.end());
  }
  const OrderingSummary ord(20, 40, ranks);
  const auto a = evaluate(ds, ord, {}, Exec::serial);
  const auto b = evaluate(ds, ord, {}, Exec::parallel);
  const auto nb = precompute_neighbors(ds, {});
  const auto c = evaluate(ds, ord, {}, Exec::parallel, &nb);
  for (std::size_t m = 0; m < 5; ++m) {
    CHECK(a[m].values == b[m].values);
    CHECK(a[m].values == c[m].values);
  }
  const auto table = kste_contribution_table(ord, {});
  for (std::size_t i = 0; i < 40; ++i) CHECK(table[i] == 0.0);
  CHECK(ksdi_contribution_table(ds, ord, {}, Exec::serial) == ksdi_contribution_table(ds, ord, {}, Exec::parallel));
}

} // TEST_SUITE
