#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mckv/measure.hpp"

namespace mckv {

/// What a coefficient sees of the law: mean, second moment and, for
/// models that integrate against the whole cloud, the cloud itself.
struct LawView {
  std::span<const double> mean;
  double second_moment = 0.0;
  const EmpiricalMeasure* cloud = nullptr;
};

/// Summary of a measure; `cloud` points back at `mu`.
struct LawSummary {
  std::vector<double> mean;
  double second_moment = 0.0;
  const EmpiricalMeasure* cloud = nullptr;
  LawView view() const { return {mean, second_moment, cloud}; }
};
LawSummary summarize(const EmpiricalMeasure& mu);

/// out has size d.
using DriftFn = std::function<void(double t, std::span<const double> x, const LawView& law, std::span<double> out)>;
/// out is d x m, row-major.
using DiffusionFn = std::function<void(double t, std::span<const double> x, const LawView& law, std::span<double> out)>;
using QpDriftFn =
    std::function<void(std::span<const double> s, std::span<const double> x, const LawView& law, std::span<double> out)>;
using QpDiffusionFn = QpDriftFn;

struct QuasiPeriodicRep {
  std::vector<double> periods;
  QpDriftFn drift_rep;
  QpDiffusionFn diffusion_rep;
};

struct CoefficientModel {
  std::size_t dim = 1;
  std::size_t noise_dim = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  std::optional<QuasiPeriodicRep> qp;
  std::string label;

  /// false when b and sigma ignore the law entirely
  bool law_dependent = true;
  /// true when the coefficients read LawView::cloud (O(N) per particle)
  bool needs_cloud = false;
  /// sigma depends on t only; the integrator evaluates it once per step
  bool state_independent_diffusion = false;
  /// Characteristic relaxation time; 0 means unknown.
  double relaxation_time = 0.0;
  /// Scale of the drift's Lipschitz constant near the bulk, used for the dt advisory.
  double lipschitz_scale = 0.0;
  /// Growth exponent of the drift; user metadata, never inferred.
  double kappa = 1.0;
};

/// Finite sum of sinusoids plus a constant:
/// f(t) = c + sum_i A_i * sin(w_i t + phi_i)   (or cos for cosine terms).
struct SinusoidTerm {
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
  bool cosine = false;
  friend bool operator==(const SinusoidTerm&, const SinusoidTerm&) = default;
};

struct ForcingSpec {
  double constant = 0.0;
  std::vector<SinusoidTerm> terms;

  static ForcingSpec none() { return {}; }
  static ForcingSpec constant_value(double c) { return {c, {}}; }
  static ForcingSpec sine(double amplitude, double frequency) { return {0.0, {{amplitude, frequency, 0.0, false}}}; }

  double value(double t) const;
  /// Term i evaluated at s[i]; value(t) equals value_qp((t, ..., t)) bit for bit.
  double value_qp(std::span<const double> s) const;
  /// Exact supremum of |f| when the frequencies are rationally independent; an upper bound otherwise.
  double sup() const { return sup_abs(); }
  double sup_abs() const;
  /// 2 pi / w_i per term.
  std::vector<double> periods() const;
  bool time_homogeneous() const { return terms.empty(); }
  /// Throws ConstructionError on non-positive frequencies or non-finite values.
  void validate() const;
  friend bool operator==(const ForcingSpec&, const ForcingSpec&) = default;
};

struct CurieWeissParams {
  double beta = 1.0;
  double k = 1.0;
  double sigma = 1.0;
  ForcingSpec forcing;
  double f_sup() const { return forcing.sup_abs(); }
};

/// b = beta (x - x^3 + f(t) - 2k (x - mean)), sigma constant. Throws ConstructionError when sigma = 0.
CoefficientModel make_curie_weiss(const CurieWeissParams& params);

/// b = -theta x + c * mean + f(t), sigma constant times identity.
struct LinearParams {
  std::size_t dim = 1;
  double theta = 1.0;
  double mean_coupling = 0.0;
  double sigma = 1.0;
  ForcingSpec forcing;
};
CoefficientModel make_linear(const LinearParams& params, std::string label = "linear");

CoefficientModel make_ou(double theta = 1.0, double sigma = 1.4142135623730951, std::size_t dim = 1);
CoefficientModel make_meanfield_ou(double theta, double coupling, double sigma, std::size_t dim = 1);
CoefficientModel make_linear_periodic(double a, double sigma, ForcingSpec forcing = ForcingSpec::sine(1.0, 1.0));

/// Generic interacting model b = V(t, x) - integral of gradW(x, y) mu(dy), sigma constant.
/// Evaluated against the whole cloud and therefore O(N) per particle.
using ConfinementFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
using InteractionGradFn = std::function<void(std::span<const double> x, std::span<const double> y, std::span<double> out)>;
CoefficientModel make_pairwise_interaction(std::size_t dim, double sigma, ConfinementFn confinement,
                                           InteractionGradFn grad_w, double kappa, std::string label);

/// Attaches a trivial representation with one period to a model whose coefficients do not depend on t.
void attach_constant_qp(CoefficientModel& model, double period);

/// b^a(t, y, mu) = b(t, y + a, mu shifted by +a): the coefficients seen by Y = X - a.
CoefficientModel shift_model(const CoefficientModel& model, std::span<const double> a);
CoefficientModel shift_model(const CoefficientModel& model, double a);

/// Coefficients (t, x, mu) -> b(t + t0, x, mu).
CoefficientModel time_shift(const CoefficientModel& model, double t0);

/// Coefficients b~(t + s_1, ..., t + s_n, x, mu); needs a quasi-periodic representation.
CoefficientModel reparameterize(const CoefficientModel& model, std::span<const double> s);

/// Pointwise evaluation against an explicit measure. Throws ModelError on non-finite output.
std::vector<double> eval_drift(const CoefficientModel& model, double t, std::span<const double> x,
                               const EmpiricalMeasure& mu);
std::vector<double> eval_diffusion(const CoefficientModel& model, double t, std::span<const double> x,
                                   const EmpiricalMeasure& mu);
/// Throws UnsupportedModelError when the model has no quasi-periodic representation.
std::vector<double> eval_qp_drift(const CoefficientModel& model, std::span<const double> s,
                                  std::span<const double> x, const EmpiricalMeasure& mu);
std::vector<double> eval_qp_diffusion(const CoefficientModel& model, std::span<const double> s,
                                      std::span<const double> x, const EmpiricalMeasure& mu);

}  // namespace mckv
