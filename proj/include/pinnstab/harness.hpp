#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pinnstab/analysis.hpp"
#include "pinnstab/csv.hpp"
#include "pinnstab/loss.hpp"
#include "pinnstab/network.hpp"
#include "pinnstab/noniid.hpp"
#include "pinnstab/pde.hpp"
#include "pinnstab/refine.hpp"
#include "pinnstab/train.hpp"

namespace pinnstab {

/// Sentinel written to time columns of static problems.
inline constexpr double kNoTime = -1.0;

// -----------------------------------------------------------------------------
// Perturbation stability
// -----------------------------------------------------------------------------

enum class PerturbMode { joint, input, param };

std::string to_string(PerturbMode mode);

struct PerturbationOptions {
  std::vector<double> eps;  ///< strictly positive, ascending; a zero control is prepended
  int directions = 32;
  PerturbMode mode = PerturbMode::joint;
  std::uint64_t seed = 1;
};

struct PerturbationResult {
  std::vector<double> eps;        ///< starts with the 0 control
  std::vector<double> deviation;  ///< mean |u(x + dx; theta + dtheta) - u(x; theta)|
  FitResult fit;                  ///< deviation against eps, control excluded
  GradientSup sup;                ///< on the training grid
  double c_empirical = 0.0;       ///< sup.input + sup.param
  LipschitzBound weight_bound;
};

/// `log_spaced(lo, hi, n)`: n points geometrically spaced including both ends.
std::vector<double> log_spaced(double lo, double hi, int n);

PerturbationResult perturbation_experiment(const NetworkConfig& config, const ParamVector& params,
                                           const Points& probe, const Points& train_grid,
                                           const PerturbationOptions& options);

// -----------------------------------------------------------------------------
// Residual consistency
// -----------------------------------------------------------------------------

struct ConsistencyPoint {
  std::size_t step = 0;
  double loss = 0.0;
  double l2_error = 0.0;
};

struct ConsistencyResult {
  std::vector<ConsistencyPoint> points;
  double pearson = 0.0;       ///< raw values, full trajectory
  double pearson_fine = 0.0;  ///< raw values, second half of the trajectory
  double spearman = 0.0;      ///< ranks, full trajectory
};

/// Non-finite checkpoints are dropped. `anchor`, when given, is prepended as
/// a pseudo-checkpoint (step 0 marker is kept from the trajectory).
ConsistencyResult consistency_experiment(const PdeProblem& problem, const NetworkConfig& config,
                                         const Trajectory& trajectory, const LossGrids& grids,
                                         const Grid& error_grid, const Field* anchor = nullptr);

// -----------------------------------------------------------------------------
// Capacity sweep
// -----------------------------------------------------------------------------

struct CapacityPoint {
  int width = 0;
  std::size_t params = 0;
  double h2_error = 0.0;          ///< space-time H2
  double h2_error_spatial = 0.0;  ///< spatial derivatives only
  double l2_error = 0.0;
  double final_loss = 0.0;
};

struct CapacityResult {
  std::vector<CapacityPoint> points;
  double rate = 0.0;
  double rate_spatial = 0.0;
  std::vector<int> skipped;  ///< widths whose training diverged
};

/// Trains (or fetches) the net for hidden widths [w, w]; returns its trajectory.
using WidthTrainer = std::function<Trajectory(const NetworkConfig&)>;

/// Throws DegenerateFit when fewer than three widths survive.
CapacityResult capacity_sweep(const PdeProblem& problem, const std::vector<int>& widths,
                              const WidthTrainer& trainer, const Grid& error_grid, std::ostream* log = nullptr);

// -----------------------------------------------------------------------------
// Energy stability
// -----------------------------------------------------------------------------

struct EnergyPoint {
  double t = 0.0;
  double energy = 0.0;
  double energy_exact = 0.0;
  double abs_error = 0.0;
  double rate = 0.0;   ///< empirical dE/dt
  double bound = 0.0;  ///< -nu ||u_x||^2 (Burgers) or integral of u_t R (wave)
};

struct EnergyResult {
  bool applicable = false;
  std::vector<EnergyPoint> points;
  double mean_error = 0.0;
  double max_error = 0.0;
  double drift = 0.0;  ///< max_t |E(t) - E(0)| / E(0)
  double rate_gap = 0.0;    ///< mean_t |dE/dt - bound|
  double mean_bound = 0.0;  ///< mean_t |bound|
};

std::vector<double> uniform_times(const Interval& range, int count);

/// Poisson yields applicable == false and no points.
EnergyResult energy_experiment(const PdeProblem& problem, const Field& trained,
                               const std::vector<double>& times, const Grid& spatial);

// -----------------------------------------------------------------------------
// Run configuration and dispatch
// -----------------------------------------------------------------------------

/// Pass/fail thresholds; defaults are the acceptance numbers.
struct Thresholds {
  double perturbation_r2 = 0.95;
  double consistency_spearman = 0.9;
  double energy_loss = 1e-3;
  double energy_rate_rel = 0.1;
  double energy_drift = 0.05;
  double energy_mean_error = 0.02;
  double regularization_ratio = 0.5;
  double noniid_factor = 1.5;
  double noniid_coverage = 0.95;
  double noniid_b3 = 0.576389;
};

struct RunConfig {
  std::vector<PdeKind> pdes = {PdeKind::burgers, PdeKind::poisson, PdeKind::wave};
  std::vector<std::string> experiments;  ///< empty = all
  std::uint64_t seed = 1;
  std::vector<int> widths = {16, 16};
  TrainConfig train;
  LossGridSpec grids;
  int probe = 101;

  // perturbation
  double eps_min = 1e-3;
  double eps_max = 1e-1;
  int eps_count = 8;
  int directions = 32;

  // capacity
  std::vector<int> capacity_widths = {4, 8, 16, 32};

  // energy
  int energy_times = 21;
  std::vector<int> energy_widths = {32, 32};

  // regularization
  std::vector<double> betas = {0.0, 1e-3, 1e-2, 1e-1, 1.0};
  int sobolev_k = 2;

  // refinement
  int refine_initial = 2;
  int refine_max = 8;
  double refine_overlap = 0.2;
  std::size_t refine_steps = 1000;

  // noniid
  std::vector<double> rhos = {0.1, 0.5, 0.9};
  std::size_t noniid_steps = 4000;
  std::size_t noniid_swap = 200;
  int noniid_width = 8;
  double noniid_eta0 = 0.02;
  double noniid_tau = 100.0;

  Thresholds thresholds;
  std::filesystem::path out = "out";
  bool overwrite = false;
  int jobs = 1;

  /// Throws ConfigError for inconsistent values.
  void validate() const;
};

/// Every experiment name in dispatch order.
const std::vector<std::string>& experiment_names();

/// Experiments the config selects, in dispatch order, paired with their pde
/// directory ("sgd" for noniid). Refinement runs for Burgers only.
std::vector<std::pair<std::string, std::string>> planned_outputs(const RunConfig& config);

std::filesystem::path output_path(const RunConfig& config, const std::string& experiment, const std::string& pde);

struct ExperimentSummary {
  std::string experiment;
  std::string pde;
  std::filesystem::path file;
  bool passed = true;
  std::string metric;                 ///< key numbers for the one-line report
  std::vector<std::string> failures;  ///< threshold violations
  double seconds = 0.0;               ///< wall time, including any training it triggered
};

/// Runs every selected experiment and writes its CSV. Throws IoError before
/// any work when an output exists and overwrite is false.
std::vector<ExperimentSummary> run_experiments(const RunConfig& config, std::ostream& log);

/// CSV schemas, one per experiment.
const std::vector<std::string>& csv_schema(const std::string& experiment);

}  // namespace pinnstab
