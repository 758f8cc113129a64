#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "mckv/errors.hpp"
#include "mckv/lift.hpp"

using namespace mckv;

TEST_CASE("torus arithmetic") {
  CHECK(wrap(-0.5, 2.0) == doctest::Approx(1.5));
  CHECK(wrap(4.0, 2.0) == 0.0);
  const auto p = TorusPoint::make({0.1, 1.9}, {1.0, 2.0});
  CHECK(p.coords[0] == doctest::Approx(0.1));
  const auto q = rotate(p, 0.95);
  CHECK(q.coords[0] == doctest::Approx(0.05));
  CHECK(q.coords[1] == doctest::Approx(0.85));
  CHECK(torus_distance(TorusPoint::make({0.05}, {1.0}), TorusPoint::make({0.95}, {1.0})) == doctest::Approx(0.1));
  const std::vector<double> periods{1.0, 2.0};
  const std::vector<std::size_t> res{4, 2};
  CHECK(torus_grid(periods, res).size() == 8);
}

TEST_CASE("Cesaro lift of a periodic flow") {
  const double tau = 1.0;
  std::vector<EmpiricalMeasure> nodes;
  for (int i = 0; i <= 8; ++i) nodes.push_back(EmpiricalMeasure::from_samples_1d({std::sin(i * M_PI / 4.0), 1.0}));
  MeasureFlow f(0.0, 0.125, nodes, FlowExtension::periodic(tau));
  const std::vector<double> periods{tau};
  const auto lift = cesaro_lift(f, 3.0, periods);
  CHECK_NOTHROW(lift.validate());
  REQUIRE(lift.fibers.size() == 8);
  REQUIRE(lift.grid.size() == 1);
  CHECK(lift.grid[0] == 8);
  for (const auto& fb : lift.fibers) {
    CHECK(fb.weight == doctest::Approx(0.125));
    CHECK(wasserstein_1d(fb.measure, f.eval(fb.base.coords[0]), 2.0) < 1e-12);
  }
}

TEST_CASE("lifted push rotates the base marginal exactly") {
  const auto model = make_linear_periodic(1.0, 1.0);
  const double tau = 2.0 * M_PI;
  LiftedMeasure mu;
  mu.periods = {tau};
  mu.grid = {8};
  for (int j = 0; j < 8; ++j) mu.fibers.push_back({TorusPoint::make({tau * j / 8.0}, {tau}), 1.0 / 8.0, EmpiricalMeasure::dirac(0.0)});
  SimConfig cfg;
  cfg.n_particles = 200;
  cfg.dt = tau / 800.0;
  cfg.record_stride = 100;
  const auto pushed = lifted_push(model, mu, tau / 4.0, cfg);
  REQUIRE(pushed.fibers.size() == 8);
  std::map<double, double> before, after;
  for (const auto& f : mu.fibers) before[wrap(f.base.coords[0] + tau / 4.0, tau)] += f.weight;
  for (const auto& f : pushed.fibers) after[f.base.coords[0]] += f.weight;
  REQUIRE(before.size() == after.size());
  for (auto it = before.begin(), jt = after.begin(); it != before.end(); ++it, ++jt) {
    CHECK(it->first == doctest::Approx(jt->first).epsilon(1e-12));
    CHECK(it->second == jt->second);
  }
}

TEST_CASE("lifted distance") {
  LiftedMeasure a;
  a.periods = {1.0};
  for (int j = 0; j < 4; ++j)
    a.fibers.push_back({TorusPoint::make({j / 4.0}, {1.0}), 0.25, EmpiricalMeasure::from_samples_1d({0.0, 1.0})});
  CHECK(lifted_distance(a, a) == 0.0);
  LiftedMeasure b = a;
  for (auto& f : b.fibers) f.measure = shift_measure(f.measure, 0.3);
  CHECK(lifted_distance(a, b, {OtMethod::exact_assignment, 64}) == doctest::Approx(0.3));
  CHECK(lifted_distance(a, b, {OtMethod::exact_assignment, 64}) ==
        doctest::Approx(lifted_distance(b, a, {OtMethod::exact_assignment, 64})));
  CHECK(lifted_distance(a, b, {OtMethod::entropic, 64, 1e-3, 2000}) == doctest::Approx(0.3).epsilon(0.05));
  CHECK_THROWS_AS(lifted_distance(a, b, {OtMethod::exact_assignment, 600}), SizeLimitError);
  LiftedMeasure bad = a;
  bad.fibers[0].weight = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConstructionError);
}
