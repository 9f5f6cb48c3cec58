#include "pinnstab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pinnstab/errors.hpp"

namespace pinnstab {

std::vector<double> trapezoid_weights(double lo, double hi, int n) {
  if (n < 2) throw ArgumentError("trapezoid rule needs at least 2 nodes");
  if (!(hi > lo)) throw ArgumentError("interval must satisfy lo < hi");
  const double h = (hi - lo) / static_cast<double>(n - 1);
  std::vector<double> w(static_cast<std::size_t>(n), h);
  w.front() = 0.5 * h;
  w.back() = 0.5 * h;
  return w;
}

namespace {

double node(const Interval& iv, int i, int n) {
  if (i == n - 1) return iv.hi;
  return iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

Grid Grid::tensor(std::span<const Interval> bounds, std::span<const int> counts) {
  if (bounds.size() != counts.size() || bounds.empty() || bounds.size() > 2) {
    throw ArgumentError("tensor grid needs 1 or 2 axes with matching counts");
  }
  Grid g;
  g.points = Points(static_cast<int>(bounds.size()));
  if (bounds.size() == 1) {
    const auto w = trapezoid_weights(bounds[0].lo, bounds[0].hi, counts[0]);
    for (int i = 0; i < counts[0]; ++i) {
      g.points.coords.push_back(node(bounds[0], i, counts[0]));
      g.weights.push_back(w[static_cast<std::size_t>(i)]);
    }
    return g;
  }
  const auto w0 = trapezoid_weights(bounds[0].lo, bounds[0].hi, counts[0]);
  const auto w1 = trapezoid_weights(bounds[1].lo, bounds[1].hi, counts[1]);
  for (int i = 0; i < counts[0]; ++i) {
    for (int j = 0; j < counts[1]; ++j) {
      g.points.coords.push_back(node(bounds[0], i, counts[0]));
      g.points.coords.push_back(node(bounds[1], j, counts[1]));
      g.weights.push_back(w0[static_cast<std::size_t>(i)] * w1[static_cast<std::size_t>(j)]);
    }
  }
  return g;
}

Grid Grid::line(Interval bounds, int count) {
  const Interval b[1] = {bounds};
  const int c[1] = {count};
  return tensor(b, c);
}

Grid Grid::face(std::span<const Interval> bounds, int fixed_axis, double value, int count) {
  Grid g;
  g.points = Points(static_cast<int>(bounds.size()));
  if (bounds.size() == 1) {
    g.points.coords.push_back(value);
    g.weights.push_back(1.0);
    return g;
  }
  const int free_axis = 1 - fixed_axis;
  const Interval& iv = bounds[static_cast<std::size_t>(free_axis)];
  const auto w = trapezoid_weights(iv.lo, iv.hi, count);
  for (int i = 0; i < count; ++i) {
    double p[2];
    p[fixed_axis] = value;
    p[free_axis] = node(iv, i, count);
    g.points.push(p);
    g.weights.push_back(w[static_cast<std::size_t>(i)]);
  }
  return g;
}

double Grid::volume() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

void Grid::append(const Grid& other) {
  if (other.empty()) return;
  if (empty()) {
    *this = other;
    return;
  }
  if (other.points.dim != points.dim) throw ArgumentError("cannot append grids of different dimension");
  points.coords.insert(points.coords.end(), other.points.coords.begin(), other.points.coords.end());
  weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

std::vector<int> all_axes(int dim) {
  std::vector<int> axes(static_cast<std::size_t>(dim));
  std::iota(axes.begin(), axes.end(), 0);
  return axes;
}

double l2_norm(const Field& field, const Grid& grid) {
  const JetBlock jets = field.jets(grid.points, 0);
  double s = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) s += grid.weights[p] * jets.value(p) * jets.value(p);
  return std::sqrt(s);
}

double sobolev_sq(const JetBlock& jets, std::span<const double> weights, int k,
                  std::span<const int> axes) {
  if (k < 1 || k > 2) throw ArgumentError("Sobolev order k must be 1 or 2, got " + std::to_string(k));
  if (jets.order < k) throw ArgumentError("jets are truncated below the requested Sobolev order");
  double s = 0.0;
  for (std::size_t p = 0; p < jets.size; ++p) {
    double v = jets.value(p) * jets.value(p);
    for (int a : axes) v += jets.grad(p, a) * jets.grad(p, a);
    if (k == 2) {
      for (std::size_t i = 0; i < axes.size(); ++i) {
        for (std::size_t j = i; j < axes.size(); ++j) {
          const double h = jets.hess(p, axes[i], axes[j]);
          v += h * h;
        }
      }
    }
    s += weights[p] * v;
  }
  return s;
}

double sobolev_norm(const Field& field, const Grid& grid, int k) {
  return sobolev_norm(field, grid, k, all_axes(grid.dim()));
}

double sobolev_norm(const Field& field, const Grid& grid, int k, std::span<const int> axes) {
  if (k < 1 || k > 2) throw ArgumentError("Sobolev order k must be 1 or 2, got " + std::to_string(k));
  return std::sqrt(sobolev_sq(field.jets(grid.points, k), grid.weights, k, axes));
}

FitResult linear_fit(std::span<const XY> pts) {
  if (pts.size() < 2) throw DegenerateFit("linear fit needs at least two points");
  const double n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const XY& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const XY& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
    syy += (p.y - my) * (p.y - my);
  }
  if (sxx == 0.0) throw DegenerateFit("linear fit: all abscissae are identical");

  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy == 0.0) {
    fit.r2 = 1.0;
    return fit;
  }
  double ss_res = 0.0;
  for (const XY& p : pts) {
    const double r = p.y - (fit.slope * p.x + fit.intercept);
    ss_res += r * r;
  }
  fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

double convergence_rate(std::span<const double> sizes, std::span<const double> errors) {
  if (sizes.size() != errors.size()) throw ArgumentError("convergence_rate: length mismatch");
  std::vector<XY> pts;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!(sizes[i] > 0.0) || !(errors[i] > 0.0)) {
      throw ArgumentError("convergence_rate: sizes and errors must be strictly positive");
    }
    pts.push_back({std::log(sizes[i]), std::log(errors[i])});
  }
  return -linear_fit(pts).slope;
}

double origin_fit_scale(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("origin_fit_scale: length mismatch");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  if (sxx == 0.0) throw DegenerateFit("origin_fit_scale: all abscissae are zero");
  return sxy / sxx;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("pearson: need two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

// Average ranks, ties share the mean of their positions.
std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return pearson(rx, ry);
}

}  // namespace pinnstab
