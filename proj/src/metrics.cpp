#include "motionorder/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace motionorder {

std::size_t NeighborSpec::effective_k(std::size_t n) const {
  if (k == 0) throw ValidationError("neighbour count k must be at least 1");
  if (n < 2) throw DomainError("neighbourhood metrics need at least 2 entities");
  return std::min(k, n - 1);
}

std::optional<std::string> NeighborSpec::clamp_warning(std::size_t n) const {
  if (n >= 2 && k > n - 1)
    return "k=" + std::to_string(k) + " exceeds n-1 for " + std::to_string(n) + " entities; using k=" +
           std::to_string(n - 1);
  return std::nullopt;
}

double harmonic_number(std::size_t k) {
  double h = 0.0;
  for (std::size_t j = 1; j <= k; ++j) h += 1.0 / static_cast<double>(j);
  return h;
}

MetricSummary MetricSeries::summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan};
  }
  double sum = 0.0;
  s.max = s.min = values[0];
  for (double v : values) {
    sum += v;
    s.max = std::max(s.max, v);
    s.min = std::min(s.min, v);
  }
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

std::int64_t tie_rank_value(std::int64_t d) {
  if (d < 1) throw DomainError("rank difference must be at least 1");
  return 2 * d - 1;
}

FrameNeighbors FrameNeighbors::compute(std::span<const Vec2> frame, std::size_t k) {
  const std::size_t n = frame.size();
  FrameNeighbors nb;
  nb.n = n;
  nb.k = NeighborSpec{k}.effective_k(n);
  nb.index.resize(n * nb.k);
  nb.distance.resize(n * nb.k);
  nb.diameter = BoundingBox::of(frame).diagonal();
  std::vector<std::pair<double, std::uint32_t>> cand(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand[c++] = {squared_distance(frame[i], frame[j]), static_cast<std::uint32_t>(j)};
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(nb.k), cand.end());
    for (std::size_t j = 0; j < nb.k; ++j) {
      nb.index[i * nb.k + j] = cand[j].second;
      nb.distance[i * nb.k + j] = std::sqrt(cand[j].first);
    }
  }
  return nb;
}

namespace {

void check_pair(std::span<const Rank> prev, std::span<const Rank> next) {
  if (prev.size() != next.size()) throw DomainError("rankings cover different entity sets");
}

double rank_value(Rank a, Rank b) {
  return static_cast<double>(tie_rank_value(std::llabs(static_cast<long long>(a) - b)));
}

double weight_cap(const FrameNeighbors& nb) {
  const double eps = 1e-12 * (nb.diameter > 0.0 ? nb.diameter : 1.0);
  return 1.0 / eps;
}

double distance_weight(double d, double cap) { return d > 0.0 ? std::min(1.0 / d, cap) : cap; }

// Entities in order of rank.
std::vector<std::uint32_t> sequence_of(std::span<const Rank> ranks) {
  std::vector<std::uint32_t> seq(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) seq[static_cast<std::size_t>(ranks[i])] = static_cast<std::uint32_t>(i);
  return seq;
}

// Visits the first k neighbours of rank position a in rank space: increasing difference,
// lower rank first at equal difference.
template <class Fn>
void for_rank_neighbors(std::size_t a, std::size_t n, std::size_t k, Fn&& fn) {
  std::size_t found = 0;
  for (std::size_t d = 1; found < k && d < n; ++d) {
    if (a >= d) {
      fn(a - d, d);
      if (++found == k) break;
    }
    if (a + d < n) {
      fn(a + d, d);
      ++found;
    }
  }
}

std::uint64_t merge_count(std::vector<Rank>& v, std::vector<Rank>& tmp, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, o = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      tmp[o++] = v[j++];
    } else {
      tmp[o++] = v[i++];
    }
  }
  while (i < mid) tmp[o++] = v[i++];
  while (j < hi) tmp[o++] = v[j++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

} // namespace

double ksra(const FrameNeighbors& nb, std::span<const Rank> ranks) {
  double total = 0.0;
  for (std::size_t i = 0; i < nb.n; ++i)
    for (std::size_t j = 0; j < nb.k; ++j)
      total += rank_value(ranks[i], ranks[nb.index[i * nb.k + j]]) / static_cast<double>(j + 1);
  return total / (static_cast<double>(nb.n) * harmonic_number(nb.k));
}

double ksdi(const FrameNeighbors& nb, std::span<const Rank> ranks) {
  const double cap = weight_cap(nb);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < nb.n; ++i)
    for (std::size_t j = 0; j < nb.k; ++j) {
      const double w = distance_weight(nb.distance[i * nb.k + j], cap);
      num += w * rank_value(ranks[i], ranks[nb.index[i * nb.k + j]]);
      den += w;
    }
  return num / den;
}

double ksra(std::span<const Vec2> frame, std::span<const Rank> ranks, const NeighborSpec& spec) {
  return ksra(FrameNeighbors::compute(frame, spec.k), ranks);
}

double ksdi(std::span<const Vec2> frame, std::span<const Rank> ranks, const NeighborSpec& spec) {
  return ksdi(FrameNeighbors::compute(frame, spec.k), ranks);
}

std::vector<double> ksdi_contributions(const FrameNeighbors& nb, std::span<const Rank> ranks) {
  const double cap = weight_cap(nb);
  std::vector<double> out(nb.n, 0.0);
  double den = 0.0;
  for (std::size_t i = 0; i < nb.n; ++i)
    for (std::size_t j = 0; j < nb.k; ++j) {
      const double w = distance_weight(nb.distance[i * nb.k + j], cap);
      out[i] += w * (rank_value(ranks[i], ranks[nb.index[i * nb.k + j]]) - 1.0);
      den += w;
    }
  for (double& v : out) v /= den;
  return out;
}

std::int64_t jmp(std::span<const Rank> prev, std::span<const Rank> next) {
  check_pair(prev, next);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < prev.size(); ++i) total += std::llabs(static_cast<long long>(prev[i]) - next[i]);
  return total;
}

std::int64_t crs(std::span<const Rank> prev, std::span<const Rank> next) {
  check_pair(prev, next);
  const auto seq = sequence_of(prev);
  std::vector<Rank> v(seq.size()), tmp(seq.size());
  for (std::size_t r = 0; r < seq.size(); ++r) v[r] = next[seq[r]];
  return static_cast<std::int64_t>(merge_count(v, tmp, 0, v.size()));
}

double kendall_tau(std::span<const Rank> prev, std::span<const Rank> next) {
  check_pair(prev, next);
  const double n = static_cast<double>(prev.size());
  if (prev.size() < 2) throw DomainError("Kendall tau needs at least 2 entities");
  return 1.0 - 2.0 * static_cast<double>(crs(prev, next)) / (n * (n - 1.0) / 2.0);
}

double kste(std::span<const Rank> prev, std::span<const Rank> next, const NeighborSpec& spec) {
  check_pair(prev, next);
  const std::size_t n = prev.size();
  const std::size_t k = spec.effective_k(n);
  const auto seq = sequence_of(prev);
  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const std::uint32_t i = seq[a];
    for_rank_neighbors(a, n, k, [&](std::size_t b, std::size_t d) {
      const double w = 1.0 / static_cast<double>(tie_rank_value(static_cast<std::int64_t>(d)));
      num += w * rank_value(next[i], next[seq[b]]);
      den += w;
    });
  }
  return num / den;
}

std::vector<double> kste_contributions(std::span<const Rank> prev, std::span<const Rank> next,
                                       const NeighborSpec& spec) {
  check_pair(prev, next);
  const std::size_t n = prev.size();
  const std::size_t k = spec.effective_k(n);
  const auto seq = sequence_of(prev);
  std::vector<double> out(n, 0.0);
  double den = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const std::uint32_t i = seq[a];
    for_rank_neighbors(a, n, k, [&](std::size_t b, std::size_t d) {
      const double unchanged = static_cast<double>(tie_rank_value(static_cast<std::int64_t>(d)));
      const double w = 1.0 / unchanged;
      out[i] += w * (rank_value(next[i], next[seq[b]]) - unchanged);
      den += w;
    });
  }
  for (double& v : out) v /= den;
  return out;
}

std::vector<FrameNeighbors> precompute_neighbors(const TrajectoryDataset& ds, const NeighborSpec& spec,
                                                 Exec exec) {
  std::vector<FrameNeighbors> out(ds.num_frames());
  parallel_for(exec, ds.num_frames(), [&](std::size_t t) { out[t] = FrameNeighbors::compute(ds.frame(t), spec.k); });
  return out;
}

namespace {

void check_match(const TrajectoryDataset& ds, const OrderingSummary& ord) {
  if (ds.num_frames() != ord.num_frames() || ds.num_entities() != ord.num_entities())
    throw ValidationError("ordering shape " + std::to_string(ord.num_frames()) + "x" +
                          std::to_string(ord.num_entities()) + " does not match dataset " +
                          std::to_string(ds.num_frames()) + "x" + std::to_string(ds.num_entities()));
}

MetricSeries make_series(const char* name, std::vector<double> values) {
  MetricSeries s{name, std::move(values), {}};
  s.summary = MetricSeries::summarize(s.values);
  return s;
}

} // namespace

std::vector<MetricSeries> evaluate(const TrajectoryDataset& ds, const OrderingSummary& ord,
                                   const NeighborSpec& spec, Exec exec,
                                   const std::vector<FrameNeighbors>* neighbors) {
  check_match(ds, ord);
  const std::size_t T = ds.num_frames();
  const std::size_t n = ds.num_entities();
  const std::size_t k = spec.effective_k(n);
  if (neighbors && (neighbors->size() != T || (T > 0 && (*neighbors)[0].k != k)))
    throw ContractError("neighbour cache does not match the dataset and neighbour spec");

  std::vector<double> ra(T), di(T);
  parallel_for(exec, T, [&](std::size_t t) {
    FrameNeighbors local;
    const FrameNeighbors* nb = neighbors ? &(*neighbors)[t] : nullptr;
    if (!nb) {
      local = FrameNeighbors::compute(ds.frame(t), k);
      nb = &local;
    }
    ra[t] = ksra(*nb, ord.ranks(t));
    di[t] = ksdi(*nb, ord.ranks(t));
  });

  const std::size_t transitions = T > 0 ? T - 1 : 0;
  std::vector<double> jm(transitions), cr(transitions), te(transitions);
  parallel_for(exec, transitions, [&](std::size_t t) {
    jm[t] = static_cast<double>(jmp(ord.ranks(t), ord.ranks(t + 1)));
    cr[t] = static_cast<double>(crs(ord.ranks(t), ord.ranks(t + 1)));
    te[t] = kste(ord.ranks(t), ord.ranks(t + 1), spec);
  });

  std::vector<MetricSeries> out;
  out.push_back(make_series("KSra", std::move(ra)));
  out.push_back(make_series("KSdi", std::move(di)));
  out.push_back(make_series("JMP", std::move(jm)));
  out.push_back(make_series("CRS", std::move(cr)));
  out.push_back(make_series("KSte", std::move(te)));
  return out;
}

std::vector<double> ksdi_contribution_table(const TrajectoryDataset& ds, const OrderingSummary& ord,
                                            const NeighborSpec& spec, Exec exec) {
  check_match(ds, ord);
  const std::size_t n = ds.num_entities();
  std::vector<double> out(ds.num_frames() * n);
  parallel_for(exec, ds.num_frames(), [&](std::size_t t) {
    const auto c = ksdi_contributions(FrameNeighbors::compute(ds.frame(t), spec.k), ord.ranks(t));
    std::copy(c.begin(), c.end(), out.begin() + static_cast<std::ptrdiff_t>(t * n));
  });
  return out;
}

std::vector<double> kste_contribution_table(const OrderingSummary& ord, const NeighborSpec& spec, Exec exec) {
  const std::size_t n = ord.num_entities();
  std::vector<double> out(ord.num_frames() * n, 0.0);
  const std::size_t transitions = ord.num_frames() > 0 ? ord.num_frames() - 1 : 0;
  parallel_for(exec, transitions, [&](std::size_t t) {
    const auto c = kste_contributions(ord.ranks(t), ord.ranks(t + 1), spec);
    std::copy(c.begin(), c.end(), out.begin() + static_cast<std::ptrdiff_t>((t + 1) * n));
  });
  return out;
}

} // namespace motionorder
