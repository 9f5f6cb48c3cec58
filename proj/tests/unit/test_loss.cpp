#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pinnstab/errors.hpp"
#include "pinnstab/loss.hpp"
#include "support.hpp"

using namespace pinnstab;
using testsupport::rel;

namespace {

constexpr double kPi = std::numbers::pi;

ParamVector zeros(const NetworkConfig& cfg) { return ParamVector(std::vector<double>(cfg.param_count(), 0.0)); }

std::shared_ptr<const Field> frozen_sine() {
  return std::make_shared<AnalyticField>(2, [](std::span<const double> x) {
    ad::Jet2 j;
    j.dim = 2;
    j.value = std::sin(kPi * x[1]);
    j.grad[1] = kPi * std::cos(kPi * x[1]);
    j.hess(1, 1) = -kPi * kPi * j.value;
    return j;
  });
}

}  // namespace

TEST_CASE("standard grids") {
  const auto b = LossGrids::standard(standard_problem(PdeKind::burgers));
  CHECK(b.interior.size() == 64 * 64);
  CHECK(b.boundary.size() == 2 * 64);
  CHECK(b.initial.size() == 64);
  const auto p = LossGrids::standard(standard_problem(PdeKind::poisson));
  CHECK(p.boundary.size() == 4 * 64);
  CHECK(p.initial.empty());
}

TEST_CASE("exact adapters have vanishing loss") {
  for (const PdeProblem& p : standard_problems()) {
    const auto g = LossGrids::standard(p);
    const LossReport r = field_loss(*exact_field(p), p, g);
    CHECK(r.total <= 1e-8);
  }
}

TEST_CASE("zero network on Burgers") {
  const PdeProblem p = standard_problem(PdeKind::burgers);
  const NetworkConfig cfg(2, {4});
  const LossReport r = residual_loss(zeros(cfg), cfg, p, LossGrids::standard(p));
  CHECK(r.initial == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(r.boundary == 0.0);
  CHECK(r.total == r.interior + r.boundary + r.initial + r.sobolev_penalty);
  const LossReport s = sobolev_loss(zeros(cfg), cfg, p, LossGrids::standard(p), 1.0, 2);
  CHECK(s.sobolev_penalty == 0.0);
}

TEST_CASE("missing grids are a configuration error") {
  const PdeProblem p = standard_problem(PdeKind::wave);
  LossGrids g = LossGrids::standard(p);
  g.initial = Grid{};
  const NetworkConfig cfg(2, {4});
  CHECK_THROWS_AS(residual_loss(init(cfg, 1), cfg, p, g), ConfigError);
}

TEST_CASE("Sobolev penalty is linear in beta and zero beta is the plain loss") {
  const PdeProblem p = standard_problem(PdeKind::poisson);
  const auto g = LossGrids::standard(p);
  const NetworkConfig cfg(2, {8, 8});
  const ParamVector th = init(cfg, 3);
  const LossReport plain = residual_loss(th, cfg, p, g);
  const LossReport zero = sobolev_loss(th, cfg, p, g, 0.0, 2);
  CHECK(zero.total == plain.total);
  const LossReport one = sobolev_loss(th, cfg, p, g, 0.5, 2);
  const LossReport two = sobolev_loss(th, cfg, p, g, 1.0, 2);
  CHECK(two.sobolev_penalty == doctest::Approx(2.0 * one.sobolev_penalty).epsilon(1e-14));
  CHECK(one.total >= plain.total);
  CHECK(two.total >= one.total);
  CHECK_THROWS_AS(sobolev_loss(th, cfg, p, g, -1.0, 2), ArgumentError);
}

TEST_CASE("objective gradient matches central differences") {
  std::mt19937_64 rng(31);
  const LossGridSpec small{9, 9, 9};
  for (const PdeProblem& p : standard_problems()) {
    for (double beta : {0.0, 0.01}) {
      const NetworkConfig cfg(2, {5, 4});
      ParamVector th = init(cfg, rng());
      std::normal_distribution<double> n(0.0, 0.2);
      for (double& v : th.values()) v += n(rng);
      const LossObjective obj(cfg, p, LossGrids::standard(p, small), SobolevPenalty{beta, 2});
      std::vector<double> grad(th.size());
      LossReport rep;
      const double J = obj.evaluate(th.span(), grad, &rep);
      CHECK(J == rep.total);
      const LossReport ref = beta == 0.0 ? residual_loss(th, cfg, p, LossGrids::standard(p, small))
                                         : sobolev_loss(th, cfg, p, LossGrids::standard(p, small), beta, 2);
      CHECK(J == doctest::Approx(ref.total).epsilon(1e-12));
      std::vector<double> t = th.values();
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double keep = t[i], h = 1e-6;
        t[i] = keep + h;
        const double up = obj.evaluate(t, {});
        t[i] = keep - h;
        const double dn = obj.evaluate(t, {});
        t[i] = keep;
        CHECK(rel(grad[i], (up - dn) / (2 * h)) <= 1e-4);
      }
    }
  }
}

TEST_CASE("energies of reference fields") {
  const PdeProblem b = standard_problem(PdeKind::burgers);
  const PdeProblem w = standard_problem(PdeKind::wave);
  const Grid line = Grid::line({0.0, 1.0}, 1001);
  CHECK(energy(*frozen_sine(), b, line, 0.3) == doctest::Approx(0.25).epsilon(1e-4));
  for (double t : {0.0, 0.3, 0.8}) CHECK(std::abs(energy(*exact_field(w), w, line, t) - kPi * kPi / 4) <= 1e-3);
  CHECK(energy(*exact_field(b), b, line, 1.0) == doctest::Approx(0.033834).epsilon(1e-4));
  const auto zero = std::make_shared<AnalyticField>(2, [](std::span<const double>) {
    ad::Jet2 j;
    j.dim = 2;
    return j;
  });
  CHECK(energy(*zero, b, line, 0.5) == 0.0);
  CHECK_THROWS_AS(energy(*zero, standard_problem(PdeKind::poisson), line, 0.0), UnsupportedOperation);
}

TEST_CASE("energy rates") {
  const PdeProblem b = standard_problem(PdeKind::burgers);
  const Grid line = Grid::line({0.0, 1.0}, 1001);
  const EnergyRate frozen = energy_rate(*frozen_sine(), b, line, 0.0);
  CHECK(frozen.empirical == 0.0);
  CHECK(frozen.bound == doctest::Approx(-0.1 * kPi * kPi / 2).epsilon(1e-4));
  const EnergyRate ex = energy_rate(*exact_field(b), b, line, 0.0);
  CHECK(std::abs(ex.empirical + 0.5) <= 1e-3);
  const PdeProblem w = standard_problem(PdeKind::wave);
  CHECK(std::abs(energy_rate(*exact_field(w), w, line, 0.4).bound) <= 1e-8);
  CHECK_THROWS_AS(energy_rate(*frozen_sine(), standard_problem(PdeKind::poisson), line, 0.0), UnsupportedOperation);
}

TEST_CASE("cubic term of Burgers integrates to zero for the exact solution") {
  const PdeProblem b = standard_problem(PdeKind::burgers);
  const Grid line = Grid::line({0.0, 1.0}, 1001);
  for (double t : {0.0, 0.5, 1.0}) {
    Points pts(2);
    for (std::size_t i = 0; i < line.size(); ++i) pts.push(std::vector<double>{t, line.points(i, 0)});
    const JetBlock jb = exact_field(b)->jets(pts, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < line.size(); ++i) s += line.weights[i] * jb.value(i) * jb.value(i) * jb.grad(i, 1);
    CHECK(std::abs(s) <= 1e-6);
  }
}
