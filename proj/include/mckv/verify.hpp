#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mckv/entrance.hpp"
#include "mckv/flow.hpp"
#include "mckv/integrate.hpp"
#include "mckv/model.hpp"

namespace mckv {

/// Coercivity data: <x, b(t,x,mu)> <= alpha_t |x|^2 + beta_t ||mu||_2^2 + gamma_t, with
/// c'_sigma |y|^2 <= <sigma sigma^T y, y> <= c_sigma |y|^2. alpha, beta, gamma are sinusoid sums.
struct DissipativityProfile {
  ForcingSpec alpha;
  ForcingSpec beta;
  ForcingSpec gamma;
  double c_sigma = 1.0;
  double c_sigma_lower = 1.0;
  double L = 1.0;
  double kappa = 1.0;
  std::size_t d = 1;

  /// Throws ConstructionError on negative beta/gamma on a test grid or non-positive constants.
  void validate() const;
  /// Long-run average of alpha + beta (the constant parts; sinusoids average out).
  double average_dissipation() const { return alpha.constant + beta.constant; }
};

DissipativityProfile profile_ou(double theta, double sigma, std::size_t d = 1);
DissipativityProfile profile_meanfield_ou(double theta, double coupling, double sigma, std::size_t d = 1);
/// b = -theta x + c mean + f(t); the forcing is absorbed with half of the remaining gap.
DissipativityProfile profile_linear(double theta, double coupling, double sigma, const ForcingSpec& forcing,
                                    std::size_t d = 1);
/// Profile shared by the Curie-Weiss model and its shifts by -1, 0, 1.
DissipativityProfile profile_curie_weiss(const CurieWeissParams& params);

/// f(t)^2 written again as a constant plus sinusoids.
ForcingSpec square(const ForcingSpec& f);

/// theta_t = integral over u < t of exp(2 int_u^t (alpha + beta)) (2 gamma_u + d c_sigma) du.
/// Throws NotDissipativeError when the average of alpha + beta is not negative.
double theta(const DissipativityProfile& profile, double t, double rel_tol = 1e-8);

/// Relative gap between theta_t and integral of exp(2 int_u^t alpha) (2 beta theta_u + 2 gamma + d c_sigma) du.
double theta_identity_residual(const DissipativityProfile& profile, double t, double rel_tol = 1e-8);

/// Moment ceiling a_p(t), p >= 2; p > 4 uses the recursion through a_{p-2}.
double a_p_bound(const DissipativityProfile& profile, double p, double t, double rel_tol = 1e-8);

struct SampleSpec {
  /// time samples; empty means 64 points over one period of the model (or [0, 2 pi))
  std::vector<double> times;
  /// half-width of the state lattice; <= 0 means 3 + 3 sqrt(theta)
  double radius = 0.0;
  std::size_t lattice_points = 21;
  std::uint64_t seed = 7;
};

struct InequalityCheck {
  std::string name;
  std::size_t samples = 0;
  std::size_t violations = 0;
  /// min over samples of (right side - left side)
  double worst_margin = 0.0;
  std::vector<std::string> witnesses;
};

struct AssumptionReport {
  std::vector<InequalityCheck> checks;
  bool violation_found = false;
  std::string summary;
};

/// Sampling-based falsification of the standing inequalities; never a proof.
AssumptionReport check_assumptions(const CoefficientModel& model, const DissipativityProfile& profile,
                                   const SampleSpec& spec = {});

/// Comparison function for the Curie-Weiss shifts, a in {-1, 0, 1}. Throws ConstructionError otherwise.
double g_a_eval(const CurieWeissParams& params, int a, double z, double w);
double g_a_second_derivative(const CurieWeissParams& params, int a, double z);

struct ConvexityResult {
  bool convex = false;
  /// point of most negative curvature when not convex
  double witness_z = 0.0;
  double witness_value = 0.0;
};
ConvexityResult g_a_convex(const CurieWeissParams& params, int a);

struct CwConditions {
  bool satisfied = false;
  std::string reason;
  double k_margin = 0.0;
  /// cubic(theta) - |f|
  double forcing_margin = 0.0;
  double beta_threshold = 0.0;
  double beta_margin = 0.0;
  /// theta^3 - 3 theta^2 + 2 theta for a = +-1, theta^3 - theta for a = 0
  double cubic = 0.0;
};
CwConditions cw_conditions(const CurieWeissParams& params, int a, double theta);

/// theta maximizing the a = +-1 cubic on [0, 1], (3 - sqrt 3) / 3, and the maximum 2 sqrt 3 / 9.
double cw_theta_star();
double cw_cubic_max();

/// "multistable" when the a = +-1 conditions hold at theta*, "unique" when the known uniqueness
/// criterion holds (f = 0), else "indeterminate".
std::string cw_regime(const CurieWeissParams& params);

struct BallMembership {
  bool member = false;
  double worst = 0.0;
};
/// sup over nodes of W1(mu_t, delta_a) against theta.
BallMembership ball_membership(const MeasureFlow& flow, double a, double theta);

struct AnchorOutcome {
  double anchor = 0.0;
  double theta = 0.0;
  bool conditions_hold = false;
  bool converged = false;
  double worst_w1 = 0.0;
  bool in_ball = false;
  /// max over nodes of ||rho_t shifted by -a||_2^2 / theta^a_t
  double moment_ratio = 0.0;
  FixedPointReport fixed_point;
};

struct BistabilityReport {
  std::vector<AnchorOutcome> anchors;
  double separation_lower_bound = 0.0;
  double measured_min_separation = 0.0;
  double mc_slack = 0.05;
  bool refused = false;
  bool certified = false;
  std::string message;
};

struct BistabilityRun {
  BistabilityReport report;
  std::vector<MeasureFlow> flows;
};

BistabilityRun multistability_run(const CurieWeissParams& params, std::span<const double> anchors,
                                  std::span<const double> thetas, Window window, double tol, int max_iter,
                                  const SimConfig& cfg, const FixedPointOptions& options = {});

}  // namespace mckv
