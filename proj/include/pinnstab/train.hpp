#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinnstab/loss.hpp"
#include "pinnstab/network.hpp"

namespace pinnstab {

enum class Optimizer { gd, adam };
enum class Schedule { constant, inverse };

std::string to_string(Optimizer o);
std::string to_string(Schedule s);
Optimizer parse_optimizer(std::string_view name);
Schedule parse_schedule(std::string_view name);

struct TrainConfig {
  Optimizer optimizer = Optimizer::adam;
  std::size_t steps = 3000;
  double eta0 = 1e-2;
  Schedule schedule = Schedule::inverse;
  double tau = 1000.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 100;

  /// Throws ConfigError on steps < 1, eta0 <= 0, tau <= 0 or checkpoint_every < 1.
  void validate() const;
};

/// eta0 (constant) or eta0 / (1 + n / tau) (inverse), n counted from 0.
double lr_at(const TrainConfig& config, std::size_t n);

struct TrajectoryPoint {
  std::size_t step = 0;
  ParamVector params;
  LossReport report;
};

struct Trajectory {
  std::vector<TrajectoryPoint> checkpoints;
  ParamVector final;
};

/// Loss with gradient written into `grad` (same length as params).
using Objective = std::function<double(std::span<const double> params, std::span<double> grad,
                                       LossReport* report)>;

/// Full-batch first-order minimization. Checkpoints are recorded at step 0,
/// every checkpoint_every steps and at the last step, each holding the
/// parameters after that many updates and their loss. Throws
/// TrainingDiverged on a non-finite loss or gradient.
Trajectory minimize(const Objective& objective, ParamVector params0, const TrainConfig& config);

/// Training on the residual loss (penalty.beta == 0) or the Sobolev-regularized loss.
Trajectory train(ParamVector params0, const NetworkConfig& net, const PdeProblem& problem,
                 const LossGrids& grids, const TrainConfig& config, const SobolevPenalty& penalty = {});

}  // namespace pinnstab
