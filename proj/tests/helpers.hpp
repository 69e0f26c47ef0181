#pragma once

#include "motionorder/core.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

using motionorder::Vec2;

inline std::vector<Vec2> random_frame(std::mt19937_64& rng, std::size_t n, double extent = 100.0) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<Vec2> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

/// Random walk dataset: entity ids e0..e{n-1}.
inline motionorder::TrajectoryDataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t T,
                                                     double step = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 100.0), s(-step, step);
  std::vector<Vec2> pos;
  std::vector<Vec2> cur(n);
  for (auto& p : cur) p = {u(rng), u(rng)};
  for (std::size_t t = 0; t < T; ++t) {
    for (auto& p : cur) p = p + Vec2{s(rng), s(rng)};
    pos.insert(pos.end(), cur.begin(), cur.end());
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("e" + std::to_string(i));
  return {ids, T, pos};
}

inline motionorder::TrajectoryDataset dataset_from_frames(const std::vector<std::vector<Vec2>>& frames) {
  std::vector<Vec2> pos;
  for (const auto& f : frames) pos.insert(pos.end(), f.begin(), f.end());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < frames.front().size(); ++i) ids.push_back("e" + std::to_string(i));
  return {ids, frames.size(), pos};
}

inline std::vector<motionorder::Rank> random_permutation(std::mt19937_64& rng, std::size_t n) {
  std::vector<motionorder::Rank> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<motionorder::Rank>(i);
  std::shuffle(r.begin(), r.end(), rng);
  return r;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("motionorder_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace testing
