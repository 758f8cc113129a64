#include <doctest.h>

#include <cmath>
#include <vector>

#include "mckv/errors.hpp"
#include "mckv/verify.hpp"

using namespace mckv;

namespace {

DissipativityProfile constant_profile(double alpha, double beta, double gamma, double c_sigma) {
  DissipativityProfile p;
  p.alpha = ForcingSpec::constant_value(alpha);
  p.beta = ForcingSpec::constant_value(beta);
  p.gamma = ForcingSpec::constant_value(gamma);
  p.c_sigma = p.c_sigma_lower = c_sigma;
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("theta on constant profiles") {
  CHECK(rel(theta(constant_profile(-1.0, 0.0, 0.0, 2.0), 0.0), 1.0) < 1e-6);
  CHECK(rel(theta(constant_profile(-2.0, 0.0, 1.0, 2.0), 3.0), 1.0) < 1e-6);
  CHECK(rel(theta(constant_profile(-3.0, 1.0, 1.0, 2.0), -7.0), 1.0) < 1e-6);
  CHECK(theta(constant_profile(-1.0, 0.0, 0.0, 3.0), 0.0) > theta(constant_profile(-1.0, 0.0, 0.0, 2.0), 0.0));
  CHECK_THROWS_AS(theta(constant_profile(-1.0, 1.0, 0.0, 1.0), 0.0), NotDissipativeError);
  try {
    theta(constant_profile(0.5, 0.0, 0.0, 1.0), 0.0);
  } catch (const NotDissipativeError& e) {
    CHECK(e.measured_average() == 0.5);
  }
}

TEST_CASE("theta with a sinusoidal gamma against a closed form") {
  // 2 gamma_u = 1 + sin u, alpha + beta = -1, d c = 1:
  // theta_t = 1 + integral e^{-2(t-u)} sin u du = 1 + (2 sin t - cos t) / 5
  auto p = constant_profile(-1.0, 0.0, 0.5, 1.0);
  p.gamma.terms.push_back({0.5, 1.0, 0.0, false});
  for (double t : {0.0, 1.0, 2.5, -4.0}) CHECK(rel(theta(p, t), 1.0 + (2.0 * std::sin(t) - std::cos(t)) / 5.0) < 1e-7);
}

TEST_CASE("identity residual") {
  CHECK(theta_identity_residual(constant_profile(-2.0, 0.5, 1.0, 2.0), 0.0, 1e-7) <= 1e-6);
  CHECK(theta_identity_residual(constant_profile(-1.0, 0.0, 0.0, 2.0), 0.0, 1e-7) <= 1e-7);
  auto p = constant_profile(-1.5, 0.3, 0.4, 1.0);
  p.alpha.terms.push_back({0.5, 1.0, 0.0, false});
  for (double t : {0.0, 1.3}) CHECK(theta_identity_residual(p, t, 1e-7) <= 1e-5);
  auto q = profile_linear(1.0, 0.0, 1.0, ForcingSpec::sine(1.0, 1.0));
  CHECK(theta_identity_residual(q, 0.7, 1e-7) <= 1e-5);
}

TEST_CASE("moment ceilings") {
  const auto p = constant_profile(-2.0, 0.5, 1.0, 2.0);
  const double th = theta(p, 0.0);
  CHECK(rel(a_p_bound(p, 2.0, 0.0), th) < 1e-6);
  const double a4 = a_p_bound(p, 4.0, 0.0);
  CHECK(rel(a4, (0.5 * th + 1.0 + 1.5 * 2.0) * th / 2.0) < 1e-6);
  const auto ou = profile_ou(1.0, std::sqrt(2.0));
  const double a2 = a_p_bound(ou, 2.0, 0.0), a4o = a_p_bound(ou, 4.0, 0.0), a6 = a_p_bound(ou, 6.0, 0.0);
  CHECK(a2 < a4o);
  CHECK(a4o < a6);
  // N(0,1): E X^4 = 3, and the ceiling must dominate it
  CHECK(a4o >= 3.0 - 1e-9);
  CHECK_THROWS_AS(a_p_bound(ou, 1.0, 0.0), ConstructionError);
}

TEST_CASE("squared forcing") {
  ForcingSpec f{0.3, {{1.0, 1.0, 0.2, false}, {0.5, 2.0, 0.0, true}, {0.7, 1.0, 0.0, true}}};
  const auto g = square(f);
  for (double t = -3.0; t < 3.0; t += 0.31) CHECK(g.value(t) == doctest::Approx(f.value(t) * f.value(t)).epsilon(1e-12));
}

TEST_CASE("profile validation") {
  auto p = constant_profile(-1.0, -0.5, 0.0, 1.0);
  CHECK_THROWS_AS(p.validate(), ConstructionError);
  CHECK_NOTHROW(profile_curie_weiss({8.0, 0.7, 1.0, {}}).validate());
  CHECK_NOTHROW(profile_linear(1.0, 0.0, 1.0, ForcingSpec::sine(1.0, 1.0)).validate());
}

TEST_CASE("assumption checks: OU is clean and tight") {
  const auto rep = check_assumptions(make_ou(1.0, std::sqrt(2.0)), profile_ou(1.0, std::sqrt(2.0)));
  CHECK_FALSE(rep.violation_found);
  for (const auto& c : rep.checks) CHECK(c.samples > 0);
  const auto& coerc = rep.checks.back();
  CHECK(coerc.name == "weak_coercivity");
  CHECK(coerc.worst_margin == doctest::Approx(0.0).scale(1.0));
  CHECK(rep.summary.find("no violation found on") == 0);
}

TEST_CASE("assumption checks: Curie-Weiss one-sided bound") {
  const CurieWeissParams cw{2.0, 0.7, 1.0, {}};
  auto prof = profile_curie_weiss(cw);
  CHECK_FALSE(check_assumptions(make_curie_weiss(cw), prof).violation_found);
  prof.L = cw.beta * (1.0 + 2.0 * cw.k);
  const auto rep = check_assumptions(make_curie_weiss(cw), prof);
  for (const auto& c : rep.checks)
    if (c.name == "one_sided_lipschitz") CHECK(c.violations == 0);
}

TEST_CASE("assumption checks: degenerate noise is caught") {
  auto m = make_ou();
  m.diffusion = [](double, std::span<const double>, const LawView&, std::span<double> out) { out[0] = 0.0; };
  const auto rep = check_assumptions(m, profile_ou(1.0, std::sqrt(2.0)));
  CHECK(rep.violation_found);
  CHECK(rep.checks[0].name == "nondegeneracy_lower");
  CHECK(rep.checks[0].violations > 0);
  CHECK_FALSE(rep.checks[0].witnesses.empty());
}

TEST_CASE("g_a polynomials") {
  const CurieWeissParams cw{2.0, 11.0 / 16.0, 1.5, {}};
  CHECK(g_a_convex(cw, 1).convex);
  CHECK(g_a_convex(cw, -1).convex);
  const auto nc = g_a_convex({2.0, 0.6, 1.0, {}}, 1);
  CHECK_FALSE(nc.convex);
  CHECK(nc.witness_z == 0.75);
  CHECK(nc.witness_value == doctest::Approx(4.0 * 2.0 * -0.175));
  for (double w : {-1.0, 0.0, 3.0}) CHECK(g_a_eval(cw, 1, 0.0, w) == -2.25);
  CHECK(g_a_eval(cw, 0, 1.0, 0.0) == doctest::Approx(2.0 * 2.0 * (1.0 + 2.0 * 11.0 / 16.0 - 1.0) - 2.25));
  CHECK(g_a_convex({1.0, 0.5, 1.0, {}}, 0).convex);
  CHECK_FALSE(g_a_convex({1.0, 0.49, 1.0, {}}, 0).convex);
  CHECK_THROWS_AS(g_a_eval(cw, 2, 0.0, 0.0), ConstructionError);
}

TEST_CASE("Curie-Weiss conditions") {
  const double ts = cw_theta_star();
  CHECK(ts == doctest::Approx((3.0 - std::sqrt(3.0)) / 3.0));
  CHECK(cw_cubic_max() == doctest::Approx(2.0 * std::sqrt(3.0) / 9.0));
  const auto forced = cw_conditions({7.0, 0.7, 1.0, ForcingSpec::constant_value(std::sqrt(3.0) / 9.0)}, 1, ts);
  CHECK(rel(forced.beta_threshold, 27.0 * (std::sqrt(3.0) + 1.0) / 12.0) < 1e-12);
  CHECK(forced.satisfied);
  const auto free = cw_conditions({1.0, 0.7, 1.0, {}}, 1, ts);
  CHECK(free.beta_threshold == doctest::Approx(9.0 / (4.0 * (std::sqrt(3.0) - 1.0))));
  CHECK_FALSE(free.satisfied);
  CHECK_FALSE(cw_conditions({100.0, 0.7, 1.0, {}}, 1, 1.5).satisfied);
  CHECK_FALSE(cw_conditions({100.0, 0.7, 1.0, {}}, 0, 0.9).satisfied);
  CHECK(cw_conditions({100.0, 0.7, 1.0, {}}, 0, 1.5).satisfied);
  CHECK_FALSE(cw_conditions({100.0, 0.6, 1.0, {}}, 1, ts).satisfied);
}

TEST_CASE("conditions are monotone in beta and the forcing") {
  const double ts = cw_theta_star();
  for (double k : {0.6, 0.7, 1.2})
    for (double f : {0.0, 0.1, 0.3}) {
      bool was = false;
      for (double beta = 0.5; beta < 40.0; beta *= 1.3) {
        const bool now = cw_conditions({beta, k, 1.0, ForcingSpec::constant_value(f)}, 1, ts).satisfied;
        CHECK((!was || now));
        was = now;
      }
    }
  bool was = false;
  for (double f = 0.4; f >= 0.0; f -= 0.02) {
    const bool now = cw_conditions({8.0, 0.7, 1.0, ForcingSpec::constant_value(f)}, 1, ts).satisfied;
    CHECK((!was || now));
    was = now;
  }
}

TEST_CASE("regimes") {
  CHECK(cw_regime({8.0, 0.7, 1.0, {}}) == "multistable");
  CHECK(cw_regime({0.05, 0.3, std::sqrt(2.0), {}}) == "unique");
  CHECK(cw_regime({0.5, 0.7, 1.0, {}}) == "indeterminate");
}

TEST_CASE("ball membership") {
  const auto c = constant_flow(EmpiricalMeasure::dirac(1.0), Window{0.0, 1.0}, 0.5);
  const auto r = ball_membership(c, 1.0, 0.0);
  CHECK(r.member);
  CHECK(r.worst == 0.0);
  const auto far = constant_flow(EmpiricalMeasure::dirac(1.5), Window{0.0, 1.0}, 0.5);
  const auto s = ball_membership(far, 1.0, 0.4);
  CHECK_FALSE(s.member);
  CHECK(s.worst == doctest::Approx(0.5));
}

TEST_CASE("bistability run refuses overlapping balls") {
  SimConfig cfg;
  cfg.n_particles = 100;
  const std::vector<double> anchors{-1.0, 1.0}, thetas{1.1, 1.1};
  const auto run = multistability_run({8.0, 0.7, 1.0, {}}, anchors, thetas, Window{0.0, 1.0}, 0.05, 3, cfg);
  CHECK(run.report.refused);
  CHECK_FALSE(run.report.certified);
  CHECK(run.flows.empty());
}

TEST_CASE("bistability run at high temperature is not certified") {
  SimConfig cfg;
  cfg.n_particles = 2000;
  cfg.dt = 1e-2;
  cfg.record_stride = 20;
  const std::vector<double> anchors{-1.0, 1.0}, thetas{0.4, 0.4};
  FixedPointOptions opt;
  opt.check_entrance = false;
  const auto run = multistability_run({0.5, 0.7, 1.0, {}}, anchors, thetas, Window{0.0, 2.0}, 0.05, 15, cfg, opt);
  CHECK_FALSE(run.report.refused);
  CHECK_FALSE(run.report.certified);
  CHECK_FALSE(run.report.anchors[0].conditions_hold);
  CHECK(run.report.measured_min_separation < run.report.separation_lower_bound);
}
