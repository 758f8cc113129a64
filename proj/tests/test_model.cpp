#include <doctest.h>

#include <cmath>
#include <vector>

#include "mckv/errors.hpp"
#include "mckv/model.hpp"

using namespace mckv;

TEST_CASE("forcing evaluation") {
  ForcingSpec f{0.5, {{2.0, 1.0, 0.3, false}, {-1.0, std::sqrt(2.0), 0.0, true}}};
  CHECK(f.value(0.7) == doctest::Approx(0.5 + 2.0 * std::sin(0.7 + 0.3) - std::cos(std::sqrt(2.0) * 0.7)));
  CHECK(f.sup_abs() == 3.5);
  const auto p = f.periods();
  REQUIRE(p.size() == 2);
  CHECK(p[0] == doctest::Approx(2.0 * M_PI));
  for (double t : {-3.0, 0.0, 1.234, 50.0}) {
    const double s[2] = {t, t};
    CHECK(f.value(t) == f.value_qp(s));
  }
  CHECK_THROWS_AS((ForcingSpec{0.0, {{1.0, -1.0, 0.0, false}}}.validate()), ConstructionError);
  CHECK(ForcingSpec::constant_value(2.0).time_homogeneous());
}

TEST_CASE("Curie-Weiss drift") {
  CurieWeissParams p{2.0, 0.5, 1.0, ForcingSpec::constant_value(0.1)};
  const auto m = make_curie_weiss(p);
  const auto mu = EmpiricalMeasure::from_samples_1d({0.0, 1.0});
  const double x = 0.8;
  const auto b = eval_drift(m, 0.0, std::span<const double>(&x, 1), mu);
  CHECK(b[0] == doctest::Approx(2.0 * (x - x * x * x + 0.1 - 2.0 * 0.5 * (x - 0.5))));
  CHECK(eval_diffusion(m, 0.0, std::span<const double>(&x, 1), mu)[0] == 1.0);
  CHECK_THROWS_AS(make_curie_weiss({1.0, 1.0, 0.0, {}}), ConstructionError);
}

TEST_CASE("quasi-periodic representation: diagonal identity and periodicity") {
  CurieWeissParams p{1.0, 0.8, 1.0, ForcingSpec{0.0, {{0.2, 1.0, 0.0, false}, {0.1, std::sqrt(2.0), 0.0, true}}}};
  const auto m = make_curie_weiss(p);
  REQUIRE(m.qp);
  REQUIRE(m.qp->periods.size() == 2);
  const auto mu = EmpiricalMeasure::from_samples_1d({-0.5, 0.2, 1.0});
  for (double t = -5.0; t <= 5.0; t += 0.37) {
    for (double x : {-1.0, 0.0, 0.7}) {
      const double s[2] = {t, t};
      CHECK(eval_qp_drift(m, s, std::span<const double>(&x, 1), mu)[0] ==
            eval_drift(m, t, std::span<const double>(&x, 1), mu)[0]);
      const double s1[2] = {t + m.qp->periods[0], t};
      const double s2[2] = {t, t + m.qp->periods[1]};
      const double b0 = eval_qp_drift(m, s, std::span<const double>(&x, 1), mu)[0];
      CHECK(eval_qp_drift(m, s1, std::span<const double>(&x, 1), mu)[0] == doctest::Approx(b0).epsilon(1e-12));
      CHECK(eval_qp_drift(m, s2, std::span<const double>(&x, 1), mu)[0] == doctest::Approx(b0).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(eval_qp_drift(make_ou(), std::vector<double>{0.0}, std::vector<double>{0.0},
                                EmpiricalMeasure::dirac(0.0)),
                  UnsupportedModelError);
}

TEST_CASE("shift conjugation") {
  const auto m = make_curie_weiss({3.0, 0.9, 1.0, {}});
  const auto sh = shift_model(m, 1.0);
  const auto mu = EmpiricalMeasure::from_samples_1d({-0.3, 0.1, 0.4});
  for (double y : {-1.0, 0.0, 0.5}) {
    const double x = y + 1.0;
    CHECK(eval_drift(sh, 0.0, std::span<const double>(&y, 1), mu)[0] ==
          doctest::Approx(eval_drift(m, 0.0, std::span<const double>(&x, 1), shift_measure(mu, 1.0))[0]));
  }
  // shifting by a then by -a gives back the original coefficients
  const auto back = shift_model(sh, -1.0);
  const double y = 0.3;
  CHECK(eval_drift(back, 0.0, std::span<const double>(&y, 1), mu)[0] ==
        doctest::Approx(eval_drift(m, 0.0, std::span<const double>(&y, 1), mu)[0]));
}

TEST_CASE("time shift and reparameterization") {
  const auto m = make_linear_periodic(1.0, 1.0);
  const auto ts = time_shift(m, 0.4);
  const auto rp = reparameterize(m, std::vector<double>{0.4});
  const auto mu = EmpiricalMeasure::dirac(0.0);
  for (double t : {0.0, 1.0, 2.5}) {
    const double x = 0.2;
    const double ref = eval_drift(m, t + 0.4, std::span<const double>(&x, 1), mu)[0];
    CHECK(eval_drift(ts, t, std::span<const double>(&x, 1), mu)[0] == doctest::Approx(ref));
    CHECK(eval_drift(rp, t, std::span<const double>(&x, 1), mu)[0] == doctest::Approx(ref));
  }
}

TEST_CASE("law dependence flags") {
  CHECK_FALSE(make_ou().law_dependent);
  CHECK(make_meanfield_ou(2.0, 0.5, 1.0).law_dependent);
  CHECK(make_curie_weiss({1.0, 1.0, 1.0, {}}).law_dependent);
  CHECK(make_linear_periodic(1.0, 1.0).qp.has_value());
}

TEST_CASE("non-finite coefficients are reported") {
  CoefficientModel m = make_ou();
  m.drift = [](double, std::span<const double>, const LawView&, std::span<double> out) { out[0] = NAN; };
  const double x = 1.0;
  CHECK_THROWS_AS(eval_drift(m, 0.5, std::span<const double>(&x, 1), EmpiricalMeasure::dirac(0.0)), ModelError);
}

TEST_CASE("pairwise interaction model sees the cloud") {
  auto m = make_pairwise_interaction(
      1, 1.0, [](double, std::span<const double> x, std::span<double> out) { out[0] = -x[0]; },
      [](std::span<const double> x, std::span<const double> y, std::span<double> out) { out[0] = x[0] - y[0]; }, 1.0,
      "quadratic");
  CHECK(m.needs_cloud);
  const auto mu = EmpiricalMeasure::from_samples_1d({0.0, 2.0});
  const double x = 1.0;
  // -x - (x - mean) with mean 1
  CHECK(eval_drift(m, 0.0, std::span<const double>(&x, 1), mu)[0] == doctest::Approx(-1.0));
}
