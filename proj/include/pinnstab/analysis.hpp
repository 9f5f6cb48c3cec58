#pragma once

#include <span>
#include <vector>

#include "pinnstab/field.hpp"
#include "pinnstab/points.hpp"

namespace pinnstab {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

/// Composite-trapezoid weights on n uniform nodes including both endpoints.
std::vector<double> trapezoid_weights(double lo, double hi, int n);

/// Quadrature nodes with weights. Tensor grids are uniform in each axis and
/// include the endpoints; the weights integrate over the box.
struct Grid {
  Points points;
  std::vector<double> weights;

  static Grid tensor(std::span<const Interval> bounds, std::span<const int> counts);
  static Grid line(Interval bounds, int count);
  /// Nodes on the face {x[fixed_axis] = value} of a 2D box, trapezoid along
  /// the free axis. For a 1D box the face is a single point of weight 1.
  static Grid face(std::span<const Interval> bounds, int fixed_axis, double value, int count);

  std::size_t size() const noexcept { return weights.size(); }
  bool empty() const noexcept { return weights.empty(); }
  int dim() const noexcept { return points.dim; }
  double volume() const;
  void append(const Grid& other);
};

/// Every coordinate axis [0, dim).
std::vector<int> all_axes(int dim);

/// sqrt(sum_i w_i u(x_i)^2).
double l2_norm(const Field& field, const Grid& grid);

/// Squared H^k norm contribution of precomputed jets: value plus every
/// derivative multi-index up to order k built only from `axes` (each
/// multi-index counted once).
double sobolev_sq(const JetBlock& jets, std::span<const double> weights, int k,
                  std::span<const int> axes);

/// H^k norm, k in {1, 2}. Throws ArgumentError otherwise.
double sobolev_norm(const Field& field, const Grid& grid, int k);
double sobolev_norm(const Field& field, const Grid& grid, int k, std::span<const int> axes);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

struct XY {
  double x;
  double y;
};

/// Ordinary least squares y = slope * x + intercept. R^2 is reported as 1
/// when the targets have zero variance. Throws DegenerateFit when all x
/// coincide.
FitResult linear_fit(std::span<const XY> points);

/// Negated slope of log(error) against log(size).
double convergence_rate(std::span<const double> sizes, std::span<const double> errors);

/// Least-squares c for y ~ c x through the origin.
double origin_fit_scale(std::span<const double> x, std::span<const double> y);

/// Correlations; 0 when either sample has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace pinnstab
