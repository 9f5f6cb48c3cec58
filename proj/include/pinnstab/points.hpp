#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pinnstab {

/// A flat list of points in R^dim, stored row-major.
struct Points {
  int dim = 1;
  std::vector<double> coords;

  Points() = default;
  explicit Points(int d) : dim(d) {}

  std::size_t size() const noexcept { return dim > 0 ? coords.size() / static_cast<std::size_t>(dim) : 0; }
  bool empty() const noexcept { return coords.empty(); }

  std::span<const double> at(std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  double operator()(std::size_t i, int axis) const {
    return coords[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(axis)];
  }
  void push(std::span<const double> p) { coords.insert(coords.end(), p.begin(), p.end()); }
};

}  // namespace pinnstab
