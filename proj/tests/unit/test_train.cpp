#include <cmath>
#include <limits>

#include "doctest.h"
#include "pinnstab/errors.hpp"
#include "pinnstab/train.hpp"

using namespace pinnstab;

namespace {

Objective quadratic(std::vector<double> target, std::vector<double> curvature) {
  return [target, curvature](std::span<const double> p, std::span<double> g, LossReport* r) {
    double J = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p[i] - target[i];
      J += 0.5 * curvature[i] * d * d;
      if (!g.empty()) g[i] = curvature[i] * d;
    }
    if (r != nullptr) r->total = r->interior = J;
    return J;
  };
}

}  // namespace

TEST_CASE("learning-rate schedules") {
  TrainConfig c;
  c.eta0 = 1.0;
  c.schedule = Schedule::inverse;
  c.tau = 1.0;
  CHECK(lr_at(c, 0) == 1.0);
  CHECK(lr_at(c, 9) == doctest::Approx(0.1));
  for (double tau : {0.5, 10.0, 1000.0}) {
    c.tau = tau;
    for (std::size_t n = 1; n < 500; ++n) CHECK(lr_at(c, n) <= lr_at(c, n - 1));
  }
  c.schedule = Schedule::constant;
  CHECK(lr_at(c, 1234) == 1.0);
  CHECK(parse_schedule("inverse") == Schedule::inverse);
  CHECK(parse_optimizer("gd") == Optimizer::gd);
  CHECK_THROWS_AS(parse_optimizer("lbfgs"), ConfigError);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.steps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.eta0 = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.checkpoint_every = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("gradient descent contracts onto a quadratic minimum") {
  TrainConfig c;
  c.optimizer = Optimizer::gd;
  c.eta0 = 0.5;
  c.schedule = Schedule::constant;
  c.steps = 200;
  const std::vector<double> target = {1.0, -2.0, 0.5};
  const Trajectory t = minimize(quadratic(target, {1.0, 1.0, 1.0}), ParamVector({0.0, 0.0, 0.0}), c);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(t.final[i] - target[i]) <= 1e-10);
}

TEST_CASE("gd below 2 / curvature decreases the loss monotonically") {
  TrainConfig c;
  c.optimizer = Optimizer::gd;
  c.schedule = Schedule::constant;
  c.steps = 300;
  c.checkpoint_every = 1;
  for (double eta : {0.05, 0.2, 0.39}) {
    c.eta0 = eta;
    const Trajectory t = minimize(quadratic({3.0, -1.0}, {5.0, 0.3}), ParamVector({0.0, 0.0}), c);
    for (std::size_t i = 1; i < t.checkpoints.size(); ++i) {
      CHECK(t.checkpoints[i].report.total <= t.checkpoints[i - 1].report.total);
    }
  }
}

TEST_CASE("checkpoints and determinism") {
  TrainConfig c;
  c.steps = 250;
  c.checkpoint_every = 100;
  const auto obj = quadratic({1.0, 2.0}, {1.0, 4.0});
  const Trajectory a = minimize(obj, ParamVector({0.0, 0.0}), c);
  const Trajectory b = minimize(obj, ParamVector({0.0, 0.0}), c);
  REQUIRE(a.checkpoints.size() == 4);
  CHECK(a.checkpoints[0].step == 0);
  CHECK(a.checkpoints[1].step == 100);
  CHECK(a.checkpoints[3].step == 250);
  CHECK(a.checkpoints.back().params == a.final);
  CHECK(a.final == b.final);
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) CHECK(a.checkpoints[i].report.total == b.checkpoints[i].report.total);
}

TEST_CASE("non-finite loss aborts with the step index") {
  TrainConfig c;
  c.steps = 50;
  Objective bad = [](std::span<const double> p, std::span<double> g, LossReport*) {
    if (!g.empty()) g[0] = 1.0;
    return p[0] < -0.05 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  try {
    minimize(bad, ParamVector({0.0}), c);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.step() > 0);
  }
}

TEST_CASE("Burgers training reduces the loss tenfold") {
  const PdeProblem p = standard_problem(PdeKind::burgers);
  const NetworkConfig net(2, {16, 16});
  const Trajectory t = train(init(net, 1), net, p, LossGrids::standard(p), TrainConfig{});
  CHECK(t.checkpoints.back().report.total <= t.checkpoints.front().report.total / 10);
  const Checkpoint ck{net, 1, t.checkpoints.back().step, t.final};
  const auto path = std::filesystem::temp_directory_path() / "pinnstab_test_reload.ckpt";
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  const LossReport r = residual_loss(back.params, back.config, p, LossGrids::standard(p));
  CHECK(std::abs(r.total - t.checkpoints.back().report.total) <= 1e-12);
  std::filesystem::remove(path);
}
