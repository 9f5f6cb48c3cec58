#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "pinnstab/errors.hpp"
#include "pinnstab/refine.hpp"

using namespace pinnstab;

TEST_CASE("uniform decomposition examples") {
  const Decomposition one = decompose({0.0, 1.0}, 1, 0.2);
  REQUIRE(one.size() == 1);
  CHECK(one[0].bounds.lo == 0.0);
  CHECK(one[0].bounds.hi == 1.0);
  const Decomposition two = decompose({0.0, 1.0}, 2, 0.2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].bounds.lo == doctest::Approx(0.0));
  CHECK(two[0].bounds.hi == doctest::Approx(0.6));
  CHECK(two[1].bounds.lo == doctest::Approx(0.4));
  CHECK(two[1].bounds.hi == doctest::Approx(1.0));
  CHECK_THROWS_AS(decompose({0.0, 1.0}, 0, 0.2), ArgumentError);
  CHECK_THROWS_AS(decompose({0.0, 1.0}, 2, 0.5), ArgumentError);
  CHECK_THROWS_AS(decompose({0.0, 1.0}, 2, 0.0), ArgumentError);
}

TEST_CASE("cores tile and bounds cover the domain for M = 1..16") {
  for (int M = 1; M <= 16; ++M) {
    const Decomposition d = decompose({0.0, 1.0}, M, 0.2);
    CHECK(d[0].core.lo == 0.0);
    CHECK(d[d.size() - 1].core.hi == 1.0);
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      CHECK(d[i].core.hi == d[i + 1].core.lo);
      CHECK(d[i].bounds.hi >= d[i + 1].bounds.lo);
    }
    for (const Subdomain& s : d.subdomains()) {
      CHECK(s.bounds.lo <= s.core.lo);
      CHECK(s.bounds.hi >= s.core.hi);
    }
    double widest = 0.0;
    for (const Subdomain& s : d.subdomains()) widest = std::max(widest, s.bounds.hi - s.bounds.lo);
    CHECK(d.sup_width() == widest);
    if (M == 1) CHECK(widest == 1.0);
  }
}

TEST_CASE("split bisects one core and keeps ids unique") {
  Decomposition d = decompose({0.0, 1.0}, 2, 0.2);
  d = d.split(1);
  REQUIRE(d.size() == 3);
  CHECK(d[1].core.lo == doctest::Approx(0.5));
  CHECK(d[1].core.hi == doctest::Approx(0.75));
  CHECK(d[1].id == 1);
  CHECK(d[2].id == 2);
  // the untouched left core [0, 0.5] plus its right overlap
  CHECK(d.sup_width() == doctest::Approx(0.55));
  CHECK_THROWS_AS(d.split(3), ArgumentError);
}

TEST_CASE("partition weights") {
  const Decomposition two = decompose({0.0, 1.0}, 2, 0.2);
  const auto mid = partition_weights(two, 0.5);
  CHECK(mid[0] == doctest::Approx(0.5));
  CHECK(mid[1] == doctest::Approx(0.5));
  const auto left = partition_weights(two, 0.1);
  CHECK(left[0] == 1.0);
  CHECK(left[1] == 0.0);
  CHECK_THROWS_AS(partition_weights(two, 1.5), ArgumentError);
}

TEST_CASE("partition of unity and support at random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int M = 1; M <= 9; ++M) {
    Decomposition d = decompose({0.0, 1.0}, M, 0.1 + 0.03 * M);
    if (M > 3) d = d.split(static_cast<std::size_t>(M / 2));
    for (int k = 0; k < 500; ++k) {
      const double x = u(rng);
      const auto w = partition_weights(d, x);
      double s = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(w[i] >= 0.0);
        CHECK(w[i] <= 1.0);
        if (w[i] > 0.0) {
          CHECK(x >= d[i].bounds.lo);
          CHECK(x <= d[i].bounds.hi);
        }
        s += w[i];
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("partition jets match differences and are continuous") {
  const Decomposition d = decompose({0.0, 1.0}, 3, 0.25).split(0);
  const double h = 1e-6;
  for (double x = 0.01; x < 0.99; x += 0.0123) {
    const auto j = partition_jets(d, x);
    const auto up = partition_weights(d, x + h);
    const auto dn = partition_weights(d, x - h);
    for (std::size_t i = 0; i < j.size(); ++i) CHECK(std::abs(j[i].d1 - (up[i] - dn[i]) / (2 * h)) <= 1e-4);
  }
  // first derivative continuous across a ramp end
  const double end = d[0].bounds.hi;
  const auto a = partition_jets(d, end - 1e-9);
  const auto b = partition_jets(d, end + 1e-9);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i].d1 - b[i].d1) <= 1e-5);
}

TEST_CASE("assembly of identical and constant pieces") {
  const PdeProblem p = standard_problem(PdeKind::burgers);
  const auto exact = exact_field(p);
  const Decomposition d = decompose({0.0, 1.0}, 4, 0.2);
  const std::vector<std::shared_ptr<const Field>> same(4, exact);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const std::vector<double> x = {u(rng), u(rng)};
    CHECK(assemble(same, d, x, 1) == p.exact(x).value);
  }
  std::vector<std::shared_ptr<const Field>> consts;
  for (int i = 0; i < 2; ++i) {
    consts.push_back(std::make_shared<AnalyticField>(2, [i](std::span<const double>) {
      ad::Jet2 j;
      j.dim = 2;
      j.value = i == 0 ? 1.0 : 3.0;
      return j;
    }));
  }
  const Decomposition two = decompose({0.0, 1.0}, 2, 0.2);
  const std::vector<double> m = {0.5, 0.5};
  CHECK(assemble(consts, two, m, 1) == doctest::Approx(2.0));
  const std::vector<double> l = {0.5, 0.05};
  CHECK(assemble(consts, two, l, 1) == 1.0);
  CHECK_THROWS_AS(AssembledField(std::vector<std::shared_ptr<const Field>>(3, exact), two, 1), ArgumentError);
}

TEST_CASE("residual indicator is non-negative and zero for the exact solution") {
  for (const PdeProblem& p : standard_problems()) {
    const Interval span{p.bounds[static_cast<std::size_t>(p.space_axis())].lo, p.bounds[static_cast<std::size_t>(p.space_axis())].hi};
    const Grid g = subdomain_grid(p, span, LossGridSpec{17, 17, 17});
    CHECK(local_indicator(*exact_field(p), p, g) <= 1e-8);
    const NetworkConfig cfg(2, {4});
    CHECK(local_indicator(*std::make_shared<NetworkField>(cfg, init(cfg, 2)), p, g) >= 0.0);
  }
}

TEST_CASE("refinement loop with the exact solution as stage solver") {
  const PdeProblem p = standard_problem(PdeKind::burgers);
  const StageSolver exact = [&](const Decomposition&, const LossGrids&, int) { return exact_field(p); };
  const std::vector<int> counts = {21, 21};
  const Grid eg = Grid::tensor(p.bounds, counts);
  const auto stages = refine_loop(p, 2, 6, 0.2, exact, eg, LossGridSpec{17, 17, 17});
  REQUIRE(stages.size() == 5);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    CHECK(stages[s].M == static_cast<int>(s) + 2);
    CHECK(stages[s].h1_error <= 1e-8);
    CHECK(stages[s].etas.size() == static_cast<std::size_t>(stages[s].M));
    if (s > 0) CHECK(stages[s].sup_width <= stages[s - 1].sup_width);
  }
}
