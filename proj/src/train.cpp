#include "pinnstab/train.hpp"

#include <cmath>

#include "pinnstab/errors.hpp"

namespace pinnstab {

std::string to_string(Optimizer o) { return o == Optimizer::gd ? "gd" : "adam"; }
std::string to_string(Schedule s) { return s == Schedule::constant ? "constant" : "inverse"; }

Optimizer parse_optimizer(std::string_view name) {
  if (name == "gd") return Optimizer::gd;
  if (name == "adam") return Optimizer::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected gd or adam)");
}

Schedule parse_schedule(std::string_view name) {
  if (name == "constant") return Schedule::constant;
  if (name == "inverse") return Schedule::inverse;
  throw ConfigError("unknown schedule '" + std::string(name) + "' (expected constant or inverse)");
}

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("train: steps must be at least 1");
  if (!(eta0 > 0.0)) throw ConfigError("train: eta0 must be positive");
  if (schedule == Schedule::inverse && !(tau > 0.0)) throw ConfigError("train: tau must be positive");
  if (checkpoint_every < 1) throw ConfigError("train: checkpoint_every must be at least 1");
}

double lr_at(const TrainConfig& config, std::size_t n) {
  if (config.schedule == Schedule::constant) return config.eta0;
  return config.eta0 / (1.0 + static_cast<double>(n) / config.tau);
}

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

Trajectory minimize(const Objective& objective, ParamVector params0, const TrainConfig& config) {
  config.validate();
  Trajectory traj;
  std::vector<double> theta = std::move(params0.values());
  const std::size_t p = theta.size();
  std::vector<double> grad(p), m(p, 0.0), v(p, 0.0);
  double b1t = 1.0, b2t = 1.0;

  for (std::size_t step = 0;; ++step) {
    LossReport report;
    const double loss = objective(theta, grad, &report);
    if (!std::isfinite(loss)) throw TrainingDiverged(step, "non-finite loss");
    if (!all_finite(grad)) throw TrainingDiverged(step, "non-finite gradient");

    const bool last = step == config.steps;
    if (step % config.checkpoint_every == 0 || last) {
      traj.checkpoints.push_back({step, ParamVector(theta), report});
    }
    if (last) break;

    const double lr = lr_at(config, step);
    if (config.optimizer == Optimizer::gd) {
      for (std::size_t i = 0; i < p; ++i) theta[i] -= lr * grad[i];
    } else {
      b1t *= config.beta1;
      b2t *= config.beta2;
      for (std::size_t i = 0; i < p; ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
        const double mh = m[i] / (1.0 - b1t);
        const double vh = v[i] / (1.0 - b2t);
        theta[i] -= lr * mh / (std::sqrt(vh) + config.epsilon);
      }
    }
  }
  traj.final = ParamVector(std::move(theta));
  return traj;
}

Trajectory train(ParamVector params0, const NetworkConfig& net, const PdeProblem& problem,
                 const LossGrids& grids, const TrainConfig& config, const SobolevPenalty& penalty) {
  check_params(net, params0.size());
  const LossObjective objective(net, problem, grids, penalty);
  return minimize(
      [&objective](std::span<const double> theta, std::span<double> grad, LossReport* report) {
        return objective.evaluate(theta, grad, report);
      },
      std::move(params0), config);
}

}  // namespace pinnstab
