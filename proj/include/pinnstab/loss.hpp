#pragma once

#include <span>
#include <vector>

#include "pinnstab/analysis.hpp"
#include "pinnstab/field.hpp"
#include "pinnstab/network.hpp"
#include "pinnstab/pde.hpp"

namespace pinnstab {

/// Node counts per axis of the interior grid and per face.
struct LossGridSpec {
  int interior = 64;
  int boundary = 64;
  int initial = 64;
};

/// Collocation grids, which double as quadrature rules.
struct LossGrids {
  Grid interior;
  Grid boundary;  ///< Dirichlet faces (spatial faces for time-dependent problems)
  Grid initial;   ///< t = t0 face; empty for Poisson

  static LossGrids standard(const PdeProblem& problem, const LossGridSpec& spec = {});
};

struct LossReport {
  double interior = 0.0;
  double boundary = 0.0;
  double initial = 0.0;
  double sobolev_penalty = 0.0;
  double total = 0.0;
};

/// beta * ||u||^2_{H^k} over the interior grid; disabled when beta == 0.
struct SobolevPenalty {
  double beta = 0.0;
  int k = 2;
};

/// Loss of an arbitrary field (used for exact adapters and assembled fields).
LossReport field_loss(const Field& field, const PdeProblem& problem, const LossGrids& grids,
                      const SobolevPenalty& penalty = {});

LossReport residual_loss(const ParamVector& params, const NetworkConfig& config,
                         const PdeProblem& problem, const LossGrids& grids);

/// Throws ArgumentError when beta < 0.
LossReport sobolev_loss(const ParamVector& params, const NetworkConfig& config,
                        const PdeProblem& problem, const LossGrids& grids, double beta, int k);

/// Loss and parameter gradient of a network on fixed grids. Forcing and
/// boundary targets are evaluated once at construction.
class LossObjective {
 public:
  LossObjective(NetworkConfig config, const PdeProblem& problem, LossGrids grids,
                SobolevPenalty penalty = {});

  /// Returns the total; grad (if non-empty) is overwritten with dJ/dtheta.
  double evaluate(std::span<const double> params, std::span<double> grad,
                  LossReport* report = nullptr) const;

  const NetworkConfig& config() const noexcept { return config_; }
  const LossGrids& grids() const noexcept { return grids_; }

 private:
  NetworkConfig config_;
  PdeProblem problem_;
  LossGrids grids_;
  SobolevPenalty penalty_;
  std::vector<double> forcing_;
  std::vector<double> boundary_target_;
  std::vector<double> initial_target_;
  std::vector<double> velocity_target_;
};

/// Energy at time t on a 1D spatial grid. Burgers: integral of u^2/2;
/// wave: integral of (u_t^2 + c^2 u_x^2)/2. Throws UnsupportedOperation for
/// problems without an energy.
double energy(const Field& field, const PdeProblem& problem, const Grid& spatial, double t);

struct EnergyRate {
  double empirical = 0.0;  ///< dE/dt by quadrature
  double bound = 0.0;      ///< -nu ||u_x||^2 (Burgers) or integral of u_t R (wave)
};

EnergyRate energy_rate(const Field& field, const PdeProblem& problem, const Grid& spatial, double t);

}  // namespace pinnstab
