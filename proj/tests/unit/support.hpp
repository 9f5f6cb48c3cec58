#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pinnstab/network.hpp"

namespace testsupport {

inline double rel(double a, double b, double floor = 1e-2) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

/// Random tanh net with 1..3 hidden layers of width 2..8 and noisy biases.
struct RandomNet {
  pinnstab::NetworkConfig config;
  pinnstab::ParamVector params;
};

inline RandomNet random_net(std::mt19937_64& rng, int dim, int max_depth = 3) {
  std::uniform_int_distribution<int> depth(1, max_depth), width(2, 8);
  std::vector<int> widths(static_cast<std::size_t>(depth(rng)));
  for (int& w : widths) w = width(rng);
  pinnstab::NetworkConfig cfg(dim, widths);
  pinnstab::ParamVector p = pinnstab::init(cfg, rng());
  std::normal_distribution<double> n(0.0, 0.3);
  for (double& v : p.values()) v += n(rng);
  return {cfg, p};
}

inline std::vector<double> random_point(std::mt19937_64& rng, int dim, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (double& v : x) v = u(rng);
  return x;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pinnstab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
