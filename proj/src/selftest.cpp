#include "pinnstab/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

#include "pinnstab/analysis.hpp"
#include "pinnstab/autodiff.hpp"
#include "pinnstab/field.hpp"
#include "pinnstab/network.hpp"
#include "pinnstab/pde.hpp"
#include "pinnstab/refine.hpp"

namespace pinnstab {

namespace {

constexpr double kPi = std::numbers::pi;

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-2); }

double jet_loss_value(std::span<const double> theta, const NetworkConfig& cfg, std::span<const double> x) {
  const ad::Jet2 j = eval_jet<double>(theta, cfg, x);
  double s = 0.0;
  for (int c = 0; c < ad::jet_components(cfg.input_dim(), 2); ++c) s += (c + 1) * j.component(c) * j.component(c);
  return s;
}

}  // namespace

FdErrors autodiff_fd_errors(int dim, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> depth(1, 3), width(2, 8);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 0.3);
  FdErrors worst;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<int> widths(static_cast<std::size_t>(depth(rng)));
    for (int& w : widths) w = width(rng);
    const NetworkConfig cfg(dim, widths);
    ParamVector theta = init(cfg, rng());
    for (double& v : theta.values()) v += normal(rng);
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (double& v : x) v = unit(rng);

    const ad::Jet2 j = eval_jet(theta, cfg, x);
    auto value_at = [&](double d0, double d1) {
      std::vector<double> y = x;
      y[0] += d0;
      if (dim > 1) y[1] += d1;
      return eval_jet(theta, cfg, y).value;
    };
    const double h1 = 1e-4, h2 = 1e-4;
    for (int k = 0; k < dim; ++k) {
      const double e0 = k == 0 ? 1.0 : 0.0, e1 = 1.0 - e0;
      const double fd = (value_at(h1 * e0, h1 * e1) - value_at(-h1 * e0, -h1 * e1)) / (2 * h1);
      worst.grad = std::max(worst.grad, rel_err(j.grad[static_cast<std::size_t>(k)], fd));
      const double f0 = j.value;
      const double fdd = (value_at(h2 * e0, h2 * e1) - 2 * f0 + value_at(-h2 * e0, -h2 * e1)) / (h2 * h2);
      worst.hess = std::max(worst.hess, rel_err(j.hess(k, k), fdd));
    }
    if (dim == 2) {
      const double fdm =
          (value_at(h2, h2) - value_at(h2, -h2) - value_at(-h2, h2) + value_at(-h2, -h2)) / (4 * h2 * h2);
      worst.hess = std::max(worst.hess, rel_err(j.hess(0, 1), fdm));
    }

    const auto g = ad::grad_params(
        [&](std::span<const ad::Var> p) {
          const auto jv = eval_jet<ad::Var>(p, cfg, x);
          ad::Var s = ad::Var(0.0);
          for (int c = 0; c < ad::jet_components(dim, 2); ++c) s = s + ad::Var(c + 1.0) * jv.component(c) * jv.component(c);
          return s;
        },
        theta.span());
    std::vector<double> t = theta.values();
    const double hp = 1e-5;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double keep = t[i];
      t[i] = keep + hp;
      const double up = jet_loss_value(t, cfg, x);
      t[i] = keep - hp;
      const double dn = jet_loss_value(t, cfg, x);
      t[i] = keep;
      worst.params = std::max(worst.params, rel_err(g[i], (up - dn) / (2 * hp)));
    }
  }
  return worst;
}

namespace {

CheckResult within(std::string id, double value, double tolerance, std::string detail = {}) {
  CheckResult r;
  r.id = std::move(id);
  r.value = value;
  r.tolerance = tolerance;
  r.passed = std::isfinite(value) && value <= tolerance;
  r.detail = std::move(detail);
  return r;
}

std::shared_ptr<const Field> sine_field(int dim) {
  return std::make_shared<AnalyticField>(dim, [dim](std::span<const double> x) {
    ad::Jet2 j;
    j.dim = dim;
    if (dim == 1) {
      j.value = std::sin(kPi * x[0]);
      j.grad[0] = kPi * std::cos(kPi * x[0]);
      j.hess(0, 0) = -kPi * kPi * j.value;
      return j;
    }
    const double sx = std::sin(kPi * x[0]), cx = std::cos(kPi * x[0]);
    const double sy = std::sin(kPi * x[1]), cy = std::cos(kPi * x[1]);
    j.value = sx * sy;
    j.grad[0] = kPi * cx * sy;
    j.grad[1] = kPi * sx * cy;
    j.hess(0, 0) = -kPi * kPi * sx * sy;
    j.hess(1, 1) = -kPi * kPi * sx * sy;
    j.hess(0, 1) = kPi * kPi * cx * cy;
    return j;
  });
}

// Residual of the exact solution with derivatives from central differences
// of its values only.
double fd_residual(const PdeProblem& problem, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double h = 1e-3;
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    std::vector<double> x(2);
    for (std::size_t k = 0; k < 2; ++k) {
      std::uniform_real_distribution<double> u(problem.bounds[k].lo, problem.bounds[k].hi);
      x[k] = u(rng);
    }
    auto at = [&](double d0, double d1) {
      const std::vector<double> y = {x[0] + d0, x[1] + d1};
      return problem.exact(y).value;
    };
    ad::Jet2 j;
    j.dim = 2;
    j.value = at(0, 0);
    j.grad[0] = (at(h, 0) - at(-h, 0)) / (2 * h);
    j.grad[1] = (at(0, h) - at(0, -h)) / (2 * h);
    j.hess(0, 0) = (at(h, 0) - 2 * j.value + at(-h, 0)) / (h * h);
    j.hess(1, 1) = (at(0, h) - 2 * j.value + at(0, -h)) / (h * h);
    j.hess(0, 1) = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
    worst = std::max(worst, std::abs(residual(problem, j, x)));
  }
  return worst;
}

}  // namespace

std::vector<CheckResult> run_selftest(const SelftestOptions& options) {
  std::vector<CheckResult> out;

  FdErrors fd;
  for (int dim : {1, 2}) {
    const FdErrors e = autodiff_fd_errors(dim, options.fd_trials, options.seed + static_cast<std::uint64_t>(dim));
    fd.grad = std::max(fd.grad, e.grad);
    fd.hess = std::max(fd.hess, e.hess);
    fd.params = std::max(fd.params, e.params);
  }
  out.push_back(within("autodiff.grad", fd.grad, 1e-5, "input gradient vs central differences"));
  out.push_back(within("autodiff.hess", fd.hess, 1e-3, "input Hessian vs second differences"));
  out.push_back(within("autodiff.params", fd.params, 1e-4, "parameter gradient vs central differences"));

  auto faulty = [&](Grid g) {
    if (options.weight_fault) options.weight_fault(g.weights);
    return g;
  };
  const Grid line = faulty(Grid::line(Interval{0.0, 1.0}, 1001));
  const auto s1 = sine_field(1);
  out.push_back(within("quadrature.l2", std::abs(l2_norm(*s1, line) - std::sqrt(0.5)), 1e-4, "||sin(pi x)||_L2 on [0,1]"));
  out.push_back(within("quadrature.h1", std::abs(sobolev_norm(*s1, line, 1) - std::sqrt(0.5 * (1 + kPi * kPi))), 1e-3,
                       "||sin(pi x)||_H1 on [0,1]"));
  const std::vector<Interval> square = {{0.0, 1.0}, {0.0, 1.0}};
  const std::vector<int> counts = {201, 201};
  const Grid sq = faulty(Grid::tensor(square, counts));
  out.push_back(within("quadrature.l2_2d", std::abs(l2_norm(*sine_field(2), sq) - 0.5), 1e-4,
                       "||sin(pi x) sin(pi y)||_L2 on the unit square"));

  const Decomposition dec = decompose(Interval{-1.0, 1.0}, 8, 0.2);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double pou = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double s = 0.0;
    for (double w : partition_weights(dec, u(rng))) s += w;
    pou = std::max(pou, std::abs(s - 1.0));
  }
  out.push_back(within("partition.unity", pou, 1e-12, "max |sum chi_i - 1| at 1e4 points, M = 8"));

  for (const PdeProblem& p : standard_problems()) {
    out.push_back(within("manufactured." + p.name(), manufactured_residual(p, 1000, options.seed), 1e-10,
                         "residual of the exact jet"));
    out.push_back(within("manufactured_fd." + p.name(), fd_residual(p, 200, options.seed), 1e-4,
                         "residual from differenced exact values"));
  }
  return out;
}

bool report(const std::vector<CheckResult>& checks, std::ostream& out) {
  bool all = true;
  for (const auto& c : checks) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e <= %.1e", c.value, c.tolerance);
    out << (c.passed ? "PASS " : "FAIL ") << c.id << "  " << buf;
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
    all = all && c.passed;
  }
  return all;
}

}  // namespace pinnstab
