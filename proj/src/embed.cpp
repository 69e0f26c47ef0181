#include "motionorder/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

namespace motionorder {

std::uint64_t frame_seed(std::uint64_t seed, std::size_t frame) {
  // splitmix64 finaliser over (seed, frame)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(frame) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

OrderingSummary Embedding1D::to_ordering(std::string tag) const {
  return OrderingSummary::from_coords(num_frames, num_entities, coords, std::move(tag));
}

namespace {

double frame_diameter(std::span<const Vec2> frame) {
  const double d = BoundingBox::of(frame).diagonal();
  return d > 0.0 ? d : 1.0;
}

} // namespace

// ---------------------------------------------------------------------------
// Sammon mapping

void SammonConfig::validate() const {
  if (iterations < 1) throw ValidationError("Sammon iterations must be at least 1");
  if (!(step > 0.0)) throw ValidationError("Sammon step factor must be positive");
}

std::vector<double> sammon_distances(std::span<const Vec2> frame, std::uint64_t seed) {
  const std::size_t n = frame.size();
  std::vector<Vec2> pts(frame.begin(), frame.end());
  auto compute = [&] {
    std::vector<double> d(n * n, 0.0);
    bool coincident = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        d[i * n + j] = d[j * n + i] = distance(pts[i], pts[j]);
        if (!(d[i * n + j] > 0.0)) coincident = true;
      }
    return std::make_pair(std::move(d), coincident);
  };
  auto [d, coincident] = compute();
  std::mt19937_64 rng(seed);
  for (int attempt = 0; coincident && attempt < 8; ++attempt) {
    const double jitter = 1e-9 * frame_diameter(frame);
    std::uniform_real_distribution<double> u(-jitter, jitter);
    for (Vec2& p : pts) p = p + Vec2{u(rng), u(rng)};
    std::tie(d, coincident) = compute();
  }
  if (coincident) throw NumericalError("coincident points could not be separated", 0);
  return d;
}

double sammon_cost(std::span<const double> dist, std::span<const double> x) {
  const std::size_t n = x.size();
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = dist[i * n + j];
      const double e = d - std::abs(x[i] - x[j]);
      total += d;
      err += e * e / d;
    }
  return total > 0.0 ? err / total : 0.0;
}

namespace {

double sammon_scale(std::span<const double> dist, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) total += dist[i * n + j];
  return total;
}

} // namespace

void sammon_gradient(std::span<const double> dist, std::span<const double> x, std::span<double> grad,
                     Exec exec) {
  const std::size_t n = x.size();
  const double c = sammon_scale(dist, n);
  parallel_for_static(exec, n, [&](std::size_t i) {
    double g = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double diff = x[i] - x[j];
      const double delta = std::abs(diff);
      const double d = dist[i * n + j];
      const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      g += (d - delta) / d * s;
    }
    grad[i] = -2.0 / c * g;
  });
}

SammonFrameResult sammon_descent(std::span<const double> dist, std::span<double> x, const SammonConfig& cfg,
                                 Exec exec) {
  const std::size_t n = x.size();
  SammonFrameResult out;
  const double c = sammon_scale(dist, n);
  // In one dimension the diagonal of the Hessian is constant: (2/c) * sum_j 1/d_ij.
  std::vector<double> curvature(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) curvature[i] += 1.0 / dist[i * n + j];
    curvature[i] *= 2.0 / c;
  }

  std::vector<double> grad(n), trial(n);
  double cost = sammon_cost(dist, x);
  for (int it = 0; it < cfg.iterations; ++it) {
    sammon_gradient(dist, x, grad, exec);
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax == 0.0) break;
    out.iterations = it + 1;

    double step = cfg.step;
    bool accepted = false;
    for (int halving = 0; halving < 40 && !accepted; ++halving, step *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - step * grad[i] / curvature[i];
      const double trial_cost = sammon_cost(dist, trial);
      if (!std::isfinite(trial_cost)) throw NumericalError("Sammon cost is not finite", 0);
      if (trial_cost <= cost) {
        std::copy(trial.begin(), trial.end(), x.begin());
        cost = trial_cost;
        accepted = true;
      }
    }
    if (!accepted) break;
    out.accepted_costs.push_back(cost);
  }
  out.cost = cost;
  return out;
}

Embedding1D sammon_embed(const TrajectoryDataset& ds, const SammonConfig& cfg, Exec exec) {
  cfg.validate();
  const std::size_t T = ds.num_frames(), n = ds.num_entities();
  if (n < 2) throw ValidationError("Sammon mapping needs at least 2 entities");
  Embedding1D emb{T, n, std::vector<double>(T * n), std::vector<int>(T), std::vector<double>(T), {}};

  auto run_frame = [&](std::size_t t, bool from_previous, Exec inner) {
    const auto frame = ds.frame(t);
    const auto dist = sammon_distances(frame, frame_seed(cfg.seed ^ 0x5A5A5A5AULL, t));
    std::span<double> x(emb.coords.data() + t * n, n);
    if (from_previous) {
      std::copy_n(emb.coords.begin() + static_cast<std::ptrdiff_t>((t - 1) * n), n, x.begin());
    } else {
      std::mt19937_64 rng(frame_seed(cfg.seed, t));
      const double diam = frame_diameter(frame);
      std::uniform_real_distribution<double> u(0.0, diam);
      for (double& v : x) v = u(rng);
    }
    try {
      const auto r = sammon_descent(dist, x, cfg, inner);
      emb.iterations_used[t] = r.iterations;
      emb.final_cost[t] = r.cost;
    } catch (const NumericalError& e) {
      throw NumericalError(e.what(), static_cast<long>(t));
    }
  };

  if (cfg.init == EmbedInit::random) {
    parallel_for(exec, T, [&](std::size_t t) { run_frame(t, false, Exec::serial); });
  } else {
    for (std::size_t t = 0; t < T; ++t) run_frame(t, t > 0, exec);
  }
  return emb;
}

// ---------------------------------------------------------------------------
// t-SNE

void TsneConfig::validate() const {
  if (!(perplexity >= 2.0)) throw ValidationError("perplexity must be at least 2");
  if (iterations < 1) throw ValidationError("t-SNE iterations must be at least 1");
  if (!(learning_rate > 0.0) || !(momentum_initial >= 0.0) || !(momentum_final >= 0.0) ||
      !(exaggeration > 0.0) || exaggeration_iterations < 0 || momentum_switch < 0)
    throw ValidationError("t-SNE optimiser parameters must be positive");
}

ConditionalAffinities tsne_conditional(std::span<const Vec2> frame, double perplexity) {
  const std::size_t n = frame.size();
  if (n < 2) throw ValidationError("t-SNE needs at least 2 points");
  if (!(perplexity > 0.0)) throw ValidationError("perplexity must be positive");
  ConditionalAffinities out{n, std::vector<double>(n * n, 0.0), std::vector<double>(n),
                            std::vector<double>(n), 0};
  const double target = std::log(perplexity); // entropy in nats
  std::vector<double> d2(n), w(n);

  for (std::size_t i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity(), dsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      d2[j] = j == i ? 0.0 : squared_distance(frame[i], frame[j]);
      if (j != i) {
        dmin = std::min(dmin, d2[j]);
        dsum += d2[j];
      }
    }
    // entropy(beta) is decreasing in beta; bisect on it, starting from the data scale.
    auto entropy = [&](double beta) {
      double sum = 0.0, wsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          w[j] = 0.0;
          continue;
        }
        w[j] = std::exp(-beta * (d2[j] - dmin));
        sum += w[j];
        wsum += w[j] * (d2[j] - dmin);
      }
      return std::log(sum) + beta * wsum / sum;
    };
    const double mean_d2 = dsum / static_cast<double>(n - 1);
    double beta = mean_d2 > 0.0 ? 1.0 / mean_d2 : 1.0;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double best_beta = beta, best_gap = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int step = 0; step < 100; ++step) {
      const double h = entropy(beta);
      const double gap = std::abs(h - target);
      if (gap < best_gap) {
        best_gap = gap;
        best_beta = beta;
      }
      if (gap < 1e-10) {
        converged = true;
        break;
      }
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    if (!converged && best_gap > 1e-6) ++out.unconverged;
    const double h = entropy(best_beta);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += w[j];
    for (std::size_t j = 0; j < n; ++j) out.p[i * n + j] = w[j] / sum;
    out.beta[i] = best_beta;
    out.perplexity[i] = std::exp(h);
  }
  return out;
}

std::vector<double> tsne_joint(const ConditionalAffinities& cond) {
  const std::size_t n = cond.n;
  std::vector<double> P(n * n, 0.0);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      P[i * n + j] = P[j * n + i] = (cond.p[i * n + j] + cond.p[j * n + i]) * scale;
  return P;
}

namespace {

// Unnormalised Student-t kernel rows q_ij = 1/(1+(y_i-y_j)^2); returns Z = sum_{i!=j} q_ij.
double student_kernel(std::span<const double> y, std::vector<double>& q, std::vector<double>& row_sum,
                      Exec exec) {
  const std::size_t n = y.size();
  parallel_for_static(exec, n, [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = y[i] - y[j];
      const double v = j == i ? 0.0 : 1.0 / (1.0 + diff * diff);
      q[i * n + j] = v;
      s += v;
    }
    row_sum[i] = s;
  });
  double z = 0.0;
  for (double s : row_sum) z += s;
  return z;
}

void kl_gradient(std::span<const double> P, double p_scale, std::span<const double> y,
                 const std::vector<double>& q, double z, std::span<double> grad, Exec exec) {
  const std::size_t n = y.size();
  const double inv_z = 1.0 / z;
  parallel_for_static(exec, n, [&](std::size_t i) {
    double g = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double qij = q[i * n + j];
      g += (p_scale * P[i * n + j] - qij * inv_z) * qij * (y[i] - y[j]);
    }
    grad[i] = 4.0 * g;
  });
}

double kl_cost(std::span<const double> P, const std::vector<double>& q, double z) {
  const std::size_t n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(P.size()))));
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double p = P[i * n + j];
      if (j == i || p <= 0.0) continue;
      c += p * std::log(p / (q[i * n + j] / z));
    }
  return c;
}

} // namespace

double tsne_cost(std::span<const double> P, std::span<const double> y) {
  const std::size_t n = y.size();
  std::vector<double> q(n * n), rows(n);
  const double z = student_kernel(y, q, rows, Exec::serial);
  return kl_cost(P, q, z);
}

void tsne_gradient(std::span<const double> P, std::span<const double> y, std::span<double> grad, Exec exec) {
  const std::size_t n = y.size();
  std::vector<double> q(n * n), rows(n);
  const double z = student_kernel(y, q, rows, exec);
  kl_gradient(P, 1.0, y, q, z, grad, exec);
}

Embedding1D tsne_embed(const TrajectoryDataset& ds, const TsneConfig& cfg, Exec exec) {
  cfg.validate();
  const std::size_t T = ds.num_frames(), n = ds.num_entities();
  if (n < 3) throw ValidationError("t-SNE needs at least 3 entities");
  if (!(cfg.perplexity < static_cast<double>(n)))
    throw ValidationError("perplexity must be smaller than the number of entities");
  Embedding1D emb{T, n, std::vector<double>(T * n), std::vector<int>(T), std::vector<double>(T), {}};
  std::vector<std::size_t> unconverged(T, 0);

  auto run_frame = [&](std::size_t t, bool from_previous, Exec inner) {
    const auto cond = tsne_conditional(ds.frame(t), cfg.perplexity);
    unconverged[t] = cond.unconverged;
    const std::vector<double> P = tsne_joint(cond);
    std::span<double> y(emb.coords.data() + t * n, n);
    if (from_previous) {
      std::copy_n(emb.coords.begin() + static_cast<std::ptrdiff_t>((t - 1) * n), n, y.begin());
    } else {
      std::mt19937_64 rng(frame_seed(cfg.seed, t));
      std::normal_distribution<double> g(0.0, 1e-4);
      for (double& v : y) v = g(rng);
    }
    const bool exaggerate = !from_previous;
    std::vector<double> q(n * n), rows(n), grad(n), update(n, 0.0), gains(n, 1.0);
    for (int it = 0; it < cfg.iterations; ++it) {
      const double z = student_kernel(y, q, rows, inner);
      const double p_scale = exaggerate && it < cfg.exaggeration_iterations ? cfg.exaggeration : 1.0;
      kl_gradient(P, p_scale, y, q, z, grad, inner);
      const double momentum = it < cfg.momentum_switch ? cfg.momentum_initial : cfg.momentum_final;
      for (std::size_t i = 0; i < n; ++i) {
        const bool same_sign = (grad[i] > 0.0) == (update[i] > 0.0);
        gains[i] = same_sign ? std::max(0.01, gains[i] * 0.8) : gains[i] + 0.2;
        update[i] = momentum * update[i] - cfg.learning_rate * gains[i] * grad[i];
        y[i] += update[i];
      }
      const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
      for (double& v : y) v -= mean;
    }
    emb.iterations_used[t] = cfg.iterations;
    const double z = student_kernel(y, q, rows, inner);
    emb.final_cost[t] = kl_cost(P, q, z);
    if (!std::isfinite(emb.final_cost[t]))
      throw NumericalError("t-SNE cost is not finite", static_cast<long>(t));
    for (double v : y)
      if (!std::isfinite(v)) throw NumericalError("t-SNE produced non-finite coordinates", static_cast<long>(t));
  };

  if (cfg.init == EmbedInit::random) {
    parallel_for(exec, T, [&](std::size_t t) { run_frame(t, false, Exec::serial); });
  } else {
    for (std::size_t t = 0; t < T; ++t) run_frame(t, t > 0, exec);
  }
  for (std::size_t t = 0; t < T; ++t)
    if (unconverged[t] > 0)
      emb.warnings.push_back("frame " + std::to_string(t) + ": bandwidth search did not converge for " +
                             std::to_string(unconverged[t]) + " points; closest sigma used");
  return emb;
}

} // namespace motionorder
