#include "pinnstab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pinnstab/errors.hpp"

namespace pinnstab {

namespace {

constexpr double kPi = std::numbers::pi;

bool on(double v, double target, double slack) { return std::abs(v - target) <= slack; }

ad::Jet2 burgers_exact(std::span<const double> p) {
  const double t = p[0], x = p[1];
  const double e = std::exp(-t);
  const double u = e * std::sin(kPi * x);
  const double ux = kPi * e * std::cos(kPi * x);
  ad::Jet2 j = ad::constant_jet(2, u);
  j.grad = {-u, ux};
  j.hess(0, 0) = u;
  j.hess(0, 1) = -ux;
  j.hess(1, 1) = -kPi * kPi * u;
  return j;
}

ad::Jet2 poisson_exact(std::span<const double> p) {
  const double sx = std::sin(kPi * p[0]), cx = std::cos(kPi * p[0]);
  const double sy = std::sin(kPi * p[1]), cy = std::cos(kPi * p[1]);
  const double u = sx * sy;
  ad::Jet2 j = ad::constant_jet(2, u);
  j.grad = {kPi * cx * sy, kPi * sx * cy};
  j.hess(0, 0) = -kPi * kPi * u;
  j.hess(0, 1) = kPi * kPi * cx * cy;
  j.hess(1, 1) = -kPi * kPi * u;
  return j;
}

ad::Jet2 wave_exact(std::span<const double> p, double c) {
  const double t = p[0], x = p[1];
  const double sx = std::sin(kPi * x), cx = std::cos(kPi * x);
  const double st = std::sin(kPi * c * t), ct = std::cos(kPi * c * t);
  ad::Jet2 j = ad::constant_jet(2, sx * ct);
  j.grad = {-kPi * c * sx * st, kPi * cx * ct};
  j.hess(0, 0) = -kPi * kPi * c * c * sx * ct;
  j.hess(0, 1) = -kPi * kPi * c * cx * st;
  j.hess(1, 1) = -kPi * kPi * sx * ct;
  return j;
}

}  // namespace

std::string to_string(PdeKind kind) {
  switch (kind) {
    case PdeKind::burgers: return "burgers";
    case PdeKind::poisson: return "poisson";
    case PdeKind::wave: return "wave";
  }
  return "unknown";
}

PdeKind parse_pde(std::string_view name) {
  if (name == "burgers") return PdeKind::burgers;
  if (name == "poisson") return PdeKind::poisson;
  if (name == "wave") return PdeKind::wave;
  throw ConfigError("unknown pde '" + std::string(name) + "' (expected burgers, poisson or wave)");
}

std::string to_string(EnergyDecay decay) {
  switch (decay) {
    case EnergyDecay::exponential: return "exponential";
    case EnergyDecay::conserved: return "conserved";
    case EnergyDecay::not_applicable: return "not_applicable";
  }
  return "unknown";
}

double EnergyModel::reference(double t) const {
  switch (decay) {
    case EnergyDecay::exponential: return initial * std::exp(-rate * t);
    case EnergyDecay::conserved: return initial;
    case EnergyDecay::not_applicable: break;
  }
  throw UnsupportedOperation("energy stability is not applicable to this problem");
}

bool PdeProblem::contains(std::span<const double> x, double slack) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    if (x[k] < bounds[k].lo - slack || x[k] > bounds[k].hi + slack) return false;
  }
  return true;
}

ad::Jet2 PdeProblem::residual_gradient(const ad::Jet2& j) const {
  ad::Jet2 d = ad::constant_jet(j.dim, 0.0);
  switch (kind) {
    case PdeKind::burgers:
      d.value = j.grad[1];
      d.grad[0] = 1.0;
      d.grad[1] = j.value;
      d.hess(1, 1) = -nu;
      break;
    case PdeKind::poisson:
      d.hess(0, 0) = -1.0;
      d.hess(1, 1) = -1.0;
      break;
    case PdeKind::wave:
      d.hess(0, 0) = 1.0;
      d.hess(1, 1) = -c * c;
      break;
  }
  return d;
}

double residual(const PdeProblem& problem, const ad::Jet2& jet, std::span<const double> x) {
  return problem.residual(jet, problem.forcing(x));
}

double boundary_target(const PdeProblem& problem, std::span<const double> x, SampleKind kind) {
  constexpr double slack = 1e-12;
  if (!problem.contains(x, slack)) throw ArgumentError("boundary sample lies outside the domain");
  if (problem.time_dependent()) {
    const Interval& sx = problem.bounds[1];
    const bool spatial_face = on(x[1], sx.lo, slack) || on(x[1], sx.hi, slack);
    const bool initial_face = on(x[0], problem.bounds[0].lo, slack);
    if (kind == SampleKind::velocity) {
      if (problem.kind != PdeKind::wave) throw ArgumentError("velocity samples exist only for the wave problem");
      if (!initial_face) throw ArgumentError("velocity sample is not on the initial face");
      return problem.velocity(x[1]);
    }
    if (spatial_face) return problem.boundary(x);
    if (initial_face) return problem.initial(x[1]);
    throw ArgumentError("sample is not on a boundary face");
  }
  if (kind == SampleKind::velocity) throw ArgumentError("velocity samples need a time-dependent problem");
  for (std::size_t k = 0; k < problem.bounds.size(); ++k) {
    if (on(x[k], problem.bounds[k].lo, slack) || on(x[k], problem.bounds[k].hi, slack)) return problem.boundary(x);
  }
  throw ArgumentError("sample is not on a boundary face");
}

double boundary_mismatch(const PdeProblem& problem, const Field& field, std::span<const double> x,
                         SampleKind kind) {
  const double target = boundary_target(problem, x, kind);
  if (kind == SampleKind::velocity) return field.jet(x, 1).grad[0] - target;
  return field.value(x) - target;
}

PdeProblem standard_problem(PdeKind kind) {
  PdeProblem p;
  p.kind = kind;
  p.bounds = {Interval{0.0, 1.0}, Interval{0.0, 1.0}};
  p.boundary = [](std::span<const double>) { return 0.0; };
  switch (kind) {
    case PdeKind::burgers: {
      p.nu = 0.1;
      p.exact = burgers_exact;
      const double nu = p.nu;
      p.forcing = [nu](std::span<const double> x) {
        const ad::Jet2 u = burgers_exact(x);
        return u.grad[0] + u.value * u.grad[1] - nu * u.hess(1, 1);
      };
      p.initial = [](double x) { return std::sin(kPi * x); };
      p.energy = {EnergyDecay::exponential, 2.0, 0.25};
      break;
    }
    case PdeKind::poisson: {
      p.exact = poisson_exact;
      p.forcing = [](std::span<const double> x) {
        return 2.0 * kPi * kPi * std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
      };
      p.energy = {EnergyDecay::not_applicable, 0.0, 0.0};
      break;
    }
    case PdeKind::wave: {
      p.c = 1.0;
      const double c = p.c;
      p.exact = [c](std::span<const double> x) { return wave_exact(x, c); };
      p.forcing = [](std::span<const double>) { return 0.0; };
      p.initial = [](double x) { return std::sin(kPi * x); };
      p.velocity = [](double) { return 0.0; };
      p.energy = {EnergyDecay::conserved, 0.0, kPi * kPi * c * c / 4.0};
      break;
    }
  }
  return p;
}

std::vector<PdeProblem> standard_problems() {
  return {standard_problem(PdeKind::burgers), standard_problem(PdeKind::poisson),
          standard_problem(PdeKind::wave)};
}

std::shared_ptr<const Field> exact_field(const PdeProblem& problem) {
  if (!problem.has_exact()) throw UnsupportedOperation(problem.name() + " has no exact solution");
  return std::make_shared<AnalyticField>(problem.dim(), problem.exact);
}

double manufactured_residual(const PdeProblem& problem, int count, std::uint64_t seed) {
  if (!problem.has_exact()) throw UnsupportedOperation(problem.name() + " has no exact solution");
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  std::vector<double> x(problem.bounds.size());
  for (int i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      std::uniform_real_distribution<double> u(problem.bounds[k].lo, problem.bounds[k].hi);
      x[k] = u(rng);
    }
    worst = std::max(worst, std::abs(residual(problem, problem.exact(x), x)));
  }
  return worst;
}

}  // namespace pinnstab
