#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinnstab/analysis.hpp"
#include "pinnstab/autodiff.hpp"
#include "pinnstab/field.hpp"

namespace pinnstab {

enum class PdeKind { burgers, poisson, wave };

std::string to_string(PdeKind kind);
PdeKind parse_pde(std::string_view name);

enum class EnergyDecay { exponential, conserved, not_applicable };

std::string to_string(EnergyDecay decay);

/// Energy E[u] = integral of a convex density. Burgers uses psi(u) = u^2 / 2;
/// the wave energy density is (u_t^2 + c^2 u_x^2) / 2.
struct EnergyModel {
  EnergyDecay decay = EnergyDecay::not_applicable;
  double rate = 0.0;     ///< lambda in E0 * exp(-lambda t) for exponential decay
  double initial = 0.0;  ///< E0

  static double psi(double u) { return 0.5 * u * u; }
  static double psi_prime(double u) { return u; }
  static double psi_second(double) { return 1.0; }

  double reference(double t) const;
};

/// Which boundary quantity a sample constrains.
enum class SampleKind { value, velocity };

/// One of the canonical problems. Coordinates are (t, x) for the
/// time-dependent problems and (x, y) for Poisson.
struct PdeProblem {
  using ScalarFn = std::function<double(std::span<const double>)>;
  using JetFn = std::function<ad::Jet2(std::span<const double>)>;

  PdeKind kind = PdeKind::burgers;
  std::vector<Interval> bounds;
  double nu = 0.1;
  double c = 1.0;
  ScalarFn forcing;
  ScalarFn boundary;                        ///< Dirichlet data g
  std::function<double(double)> initial;   ///< u0(x)
  std::function<double(double)> velocity;   ///< u1(x), wave only
  JetFn exact;                              ///< empty when unknown
  EnergyModel energy;

  std::string name() const { return to_string(kind); }
  int dim() const noexcept { return static_cast<int>(bounds.size()); }
  bool time_dependent() const noexcept { return kind != PdeKind::poisson; }
  /// Axis of the spatial coordinate decomposed by refinement.
  int space_axis() const noexcept { return time_dependent() ? 1 : 0; }
  bool has_exact() const noexcept { return static_cast<bool>(exact); }
  bool contains(std::span<const double> x, double slack = 1e-12) const;

  /// L[u] - f given the local forcing value f.
  template <class T>
  T residual(const ad::BasicJet<T>& j, double f) const {
    switch (kind) {
      case PdeKind::burgers:
        return j.grad[0] + j.value * j.grad[1] - T(nu) * j.hess(1, 1) - T(f);
      case PdeKind::poisson:
        return -(j.hess(0, 0) + j.hess(1, 1)) - T(f);
      case PdeKind::wave:
        return j.hess(0, 0) - T(c * c) * j.hess(1, 1) - T(f);
    }
    return T(0.0);
  }

  /// dR / d(component) for every jet component; independent of f.
  ad::Jet2 residual_gradient(const ad::Jet2& j) const;
};

/// Residual at a point, forcing evaluated there.
double residual(const PdeProblem& problem, const ad::Jet2& jet, std::span<const double> x);

/// Target of a boundary sample: g on Dirichlet faces, u0 (value) or u1
/// (velocity) on the initial face. Throws ArgumentError off the boundary.
double boundary_target(const PdeProblem& problem, std::span<const double> x, SampleKind kind);

/// u - g, or u_t - u1 for velocity samples.
double boundary_mismatch(const PdeProblem& problem, const Field& field, std::span<const double> x,
                         SampleKind kind);

PdeProblem standard_problem(PdeKind kind);
std::vector<PdeProblem> standard_problems();

/// Field adapter over the exact solution. Throws UnsupportedOperation if absent.
std::shared_ptr<const Field> exact_field(const PdeProblem& problem);

/// max |residual(exact)| over `count` seeded uniform interior points.
double manufactured_residual(const PdeProblem& problem, int count, std::uint64_t seed);

}  // namespace pinnstab
