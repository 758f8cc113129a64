#include "mckv/model.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include "mckv/errors.hpp"

namespace mckv {

namespace {

// Scratch buffer for folded torus coordinates; avoids a heap allocation per
// particle for the usual small n.
class SmallBuffer {
public:
  explicit SmallBuffer(std::size_t n) : n_(n) {
    if (n > inline_.size()) heap_.resize(n);
  }
  std::span<double> span() { return n_ > inline_.size() ? std::span<double>(heap_) : std::span<double>(inline_.data(), n_); }

private:
  std::size_t n_;
  std::array<double, 8> inline_{};
  std::vector<double> heap_;
};

void check_finite(std::span<const double> out, const char* what, double t, std::span<const double> x) {
  for (double v : out) {
    if (!std::isfinite(v)) throw ModelError(std::string(what) + " returned a non-finite value", t, {x.begin(), x.end()});
  }
}

double sinusoid(const SinusoidTerm& term, double s) {
  const double arg = term.frequency * s + term.phase;
  return term.amplitude * (term.cosine ? std::cos(arg) : std::sin(arg));
}

void constant_diffusion(std::size_t d, double sigma, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < d; ++i) out[i * d + i] = sigma;
}

}  // namespace

LawSummary summarize(const EmpiricalMeasure& mu) {
  LawSummary s;
  s.mean = mu.mean();
  s.second_moment = mu.moment(2.0);
  s.cloud = &mu;
  return s;
}

double ForcingSpec::value(double t) const {
  double f = constant;
  for (const auto& term : terms) f += sinusoid(term, t);
  return f;
}

double ForcingSpec::value_qp(std::span<const double> s) const {
  double f = constant;
  for (std::size_t i = 0; i < terms.size(); ++i) f += sinusoid(terms[i], s[i]);
  return f;
}

double ForcingSpec::sup_abs() const {
  double s = std::abs(constant);
  for (const auto& term : terms) s += std::abs(term.amplitude);
  return s;
}

std::vector<double> ForcingSpec::periods() const {
  std::vector<double> p;
  p.reserve(terms.size());
  for (const auto& term : terms) p.push_back(2.0 * std::numbers::pi / term.frequency);
  return p;
}

void ForcingSpec::validate() const {
  if (!std::isfinite(constant)) throw ConstructionError("forcing constant must be finite");
  for (const auto& term : terms) {
    if (!std::isfinite(term.amplitude) || !std::isfinite(term.phase)) {
      throw ConstructionError("forcing terms must be finite");
    }
    if (!(term.frequency > 0.0) || !std::isfinite(term.frequency)) {
      throw ConstructionError("forcing frequencies must be positive");
    }
  }
}

CoefficientModel make_curie_weiss(const CurieWeissParams& p) {
  if (p.sigma == 0.0 || !std::isfinite(p.sigma)) {
    throw ConstructionError("Curie-Weiss: sigma must be nonzero (degenerate diffusion)");
  }
  if (!(p.beta > 0.0)) throw ConstructionError("Curie-Weiss: beta must be positive");
  if (!(p.k > 0.0)) throw ConstructionError("Curie-Weiss: k must be positive");
  p.forcing.validate();

  CoefficientModel m;
  m.dim = 1;
  m.noise_dim = 1;
  m.label = "curie_weiss";
  m.law_dependent = true;
  m.state_independent_diffusion = true;
  m.relaxation_time = 1.0 / p.beta;
  m.lipschitz_scale = p.beta * (2.0 + 2.0 * p.k);
  m.kappa = 3.0;

  const double beta = p.beta, k = p.k, sigma = p.sigma;
  const ForcingSpec forcing = p.forcing;
  auto core = [beta, k](double f, double x, double mean) { return beta * (x - x * x * x + f - 2.0 * k * (x - mean)); };
  m.drift = [core, forcing](double t, std::span<const double> x, const LawView& law, std::span<double> out) {
    out[0] = core(forcing.value(t), x[0], law.mean[0]);
  };
  m.diffusion = [sigma](double, std::span<const double>, const LawView&, std::span<double> out) { out[0] = sigma; };
  if (!forcing.time_homogeneous()) {
    QuasiPeriodicRep qp;
    qp.periods = forcing.periods();
    qp.drift_rep = [core, forcing](std::span<const double> s, std::span<const double> x, const LawView& law,
                                   std::span<double> out) { out[0] = core(forcing.value_qp(s), x[0], law.mean[0]); };
    qp.diffusion_rep = [sigma](std::span<const double>, std::span<const double>, const LawView&, std::span<double> out) {
      out[0] = sigma;
    };
    m.qp = std::move(qp);
  }
  return m;
}

CoefficientModel make_linear(const LinearParams& p, std::string label) {
  if (p.dim < 1) throw ConstructionError("linear model: dim must be >= 1");
  if (p.sigma == 0.0 || !std::isfinite(p.sigma)) throw ConstructionError("linear model: sigma must be nonzero");
  if (!std::isfinite(p.theta) || !std::isfinite(p.mean_coupling)) throw ConstructionError("linear model: non-finite coefficient");
  p.forcing.validate();

  CoefficientModel m;
  m.dim = p.dim;
  m.noise_dim = p.dim;
  m.label = std::move(label);
  m.law_dependent = p.mean_coupling != 0.0;
  m.state_independent_diffusion = true;
  const double gap = p.theta - std::max(p.mean_coupling, 0.0);
  m.relaxation_time = gap > 0.0 ? 1.0 / gap : (p.theta > 0.0 ? 1.0 / p.theta : 0.0);
  m.lipschitz_scale = std::abs(p.theta) + std::abs(p.mean_coupling);
  m.kappa = 1.0;

  const std::size_t d = p.dim;
  const double theta = p.theta, c = p.mean_coupling, sigma = p.sigma;
  const ForcingSpec forcing = p.forcing;
  auto core = [d, theta, c](double f, std::span<const double> x, const LawView& law, std::span<double> out) {
    for (std::size_t i = 0; i < d; ++i) out[i] = -theta * x[i] + (c != 0.0 ? c * law.mean[i] : 0.0) + f;
  };
  m.drift = [core, forcing](double t, std::span<const double> x, const LawView& law, std::span<double> out) {
    core(forcing.value(t), x, law, out);
  };
  m.diffusion = [d, sigma](double, std::span<const double>, const LawView&, std::span<double> out) {
    constant_diffusion(d, sigma, out);
  };
  if (!forcing.time_homogeneous()) {
    QuasiPeriodicRep qp;
    qp.periods = forcing.periods();
    qp.drift_rep = [core, forcing](std::span<const double> s, std::span<const double> x, const LawView& law,
                                   std::span<double> out) { core(forcing.value_qp(s), x, law, out); };
    qp.diffusion_rep = [d, sigma](std::span<const double>, std::span<const double>, const LawView&,
                                  std::span<double> out) { constant_diffusion(d, sigma, out); };
    m.qp = std::move(qp);
  }
  return m;
}

CoefficientModel make_ou(double theta, double sigma, std::size_t dim) {
  return make_linear({dim, theta, 0.0, sigma, {}}, "ou");
}

CoefficientModel make_meanfield_ou(double theta, double coupling, double sigma, std::size_t dim) {
  return make_linear({dim, theta, coupling, sigma, {}}, "meanfield_ou");
}

CoefficientModel make_linear_periodic(double a, double sigma, ForcingSpec forcing) {
  return make_linear({1, a, 0.0, sigma, std::move(forcing)}, "linear_periodic");
}

CoefficientModel make_pairwise_interaction(std::size_t dim, double sigma, ConfinementFn confinement,
                                           InteractionGradFn grad_w, double kappa, std::string label) {
  if (dim < 1) throw ConstructionError("interaction model: dim must be >= 1");
  if (sigma == 0.0) throw ConstructionError("interaction model: sigma must be nonzero");
  if (!confinement || !grad_w) throw ConstructionError("interaction model: missing callback");
  CoefficientModel m;
  m.dim = dim;
  m.noise_dim = dim;
  m.label = std::move(label);
  m.needs_cloud = true;
  m.state_independent_diffusion = true;
  m.kappa = kappa;
  m.drift = [dim, confinement, grad_w](double t, std::span<const double> x, const LawView& law, std::span<double> out) {
    if (law.cloud == nullptr) throw ModelError("interaction model evaluated without a particle cloud", t, {x.begin(), x.end()});
    confinement(t, x, out);
    SmallBuffer buf(dim);
    auto g = buf.span();
    const auto& mu = *law.cloud;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      grad_w(x, mu.point(j), g);
      for (std::size_t i = 0; i < dim; ++i) out[i] -= mu.weight(j) * g[i];
    }
  };
  m.diffusion = [dim, sigma](double, std::span<const double>, const LawView&, std::span<double> out) {
    constant_diffusion(dim, sigma, out);
  };
  return m;
}

void attach_constant_qp(CoefficientModel& model, double period) {
  if (!(period > 0.0)) throw ConstructionError("representation period must be positive");
  QuasiPeriodicRep qp;
  qp.periods = {period};
  qp.drift_rep = [drift = model.drift](std::span<const double> s, std::span<const double> x, const LawView& law,
                                       std::span<double> out) { drift(s[0], x, law, out); };
  qp.diffusion_rep = [diffusion = model.diffusion](std::span<const double> s, std::span<const double> x,
                                                   const LawView& law, std::span<double> out) {
    diffusion(s[0], x, law, out);
  };
  model.qp = std::move(qp);
}

namespace {

// Law of X + a given the law of X, at summary level.
struct ShiftedLaw {
  SmallBuffer mean_buf;
  double second_moment;
  std::optional<EmpiricalMeasure> cloud;

  ShiftedLaw(const LawView& law, std::span<const double> a, bool needs_cloud) : mean_buf(a.size()) {
    auto mean = mean_buf.span();
    double dot = 0.0, aa = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      mean[i] = law.mean[i] + a[i];
      dot += a[i] * law.mean[i];
      aa += a[i] * a[i];
    }
    second_moment = law.second_moment + 2.0 * dot + aa;
    if (needs_cloud && law.cloud != nullptr) cloud = shift_measure(*law.cloud, a);
  }
  LawView view() { return {mean_buf.span(), second_moment, cloud ? &*cloud : nullptr}; }
};

template <class Fn>
auto shifted_coefficient(Fn fn, std::vector<double> a, bool needs_cloud) {
  return [fn = std::move(fn), a = std::move(a), needs_cloud](auto first, std::span<const double> y, const LawView& law,
                                                             std::span<double> out) {
    SmallBuffer xb(a.size());
    auto x = xb.span();
    for (std::size_t i = 0; i < a.size(); ++i) x[i] = y[i] + a[i];
    ShiftedLaw shifted(law, a, needs_cloud);
    fn(first, x, shifted.view(), out);
  };
}

}  // namespace

CoefficientModel shift_model(const CoefficientModel& model, std::span<const double> a) {
  if (a.size() != model.dim) throw ConstructionError("shift_model: shift dimension does not match the model");
  std::vector<double> av(a.begin(), a.end());
  CoefficientModel out = model;
  out.drift = shifted_coefficient(model.drift, av, model.needs_cloud);
  out.diffusion = shifted_coefficient(model.diffusion, av, model.needs_cloud);
  if (model.qp) {
    out.qp->drift_rep = shifted_coefficient(model.qp->drift_rep, av, model.needs_cloud);
    out.qp->diffusion_rep = shifted_coefficient(model.qp->diffusion_rep, av, model.needs_cloud);
  }
  out.label = model.label + "^shift";
  return out;
}

CoefficientModel shift_model(const CoefficientModel& model, double a) {
  return shift_model(model, std::span<const double>(&a, 1));
}

CoefficientModel time_shift(const CoefficientModel& model, double t0) {
  CoefficientModel out = model;
  out.drift = [fn = model.drift, t0](double t, std::span<const double> x, const LawView& law, std::span<double> o) {
    fn(t + t0, x, law, o);
  };
  out.diffusion = [fn = model.diffusion, t0](double t, std::span<const double> x, const LawView& law,
                                             std::span<double> o) { fn(t + t0, x, law, o); };
  if (model.qp) {
    auto wrap = [t0](QpDriftFn fn) -> QpDriftFn {
      return [fn = std::move(fn), t0](std::span<const double> s, std::span<const double> x, const LawView& law,
                                      std::span<double> o) {
        SmallBuffer buf(s.size());
        auto u = buf.span();
        for (std::size_t i = 0; i < s.size(); ++i) u[i] = s[i] + t0;
        fn(u, x, law, o);
      };
    };
    out.qp->drift_rep = wrap(model.qp->drift_rep);
    out.qp->diffusion_rep = wrap(model.qp->diffusion_rep);
  }
  return out;
}

CoefficientModel reparameterize(const CoefficientModel& model, std::span<const double> s) {
  if (!model.qp) throw UnsupportedModelError("model '" + model.label + "' has no quasi-periodic representation");
  if (s.size() != model.qp->periods.size()) {
    throw ConstructionError("reparameterize: base point has " + std::to_string(s.size()) + " coordinates, model needs " +
                            std::to_string(model.qp->periods.size()));
  }
  std::vector<double> sv(s.begin(), s.end());
  auto fold = [sv](QpDriftFn fn) {
    return [fn = std::move(fn), sv](double t, std::span<const double> x, const LawView& law, std::span<double> o) {
      SmallBuffer buf(sv.size());
      auto u = buf.span();
      for (std::size_t i = 0; i < sv.size(); ++i) u[i] = t + sv[i];
      fn(u, x, law, o);
    };
  };
  auto shift_rep = [sv](QpDriftFn fn) -> QpDriftFn {
    return [fn = std::move(fn), sv](std::span<const double> r, std::span<const double> x, const LawView& law,
                                    std::span<double> o) {
      SmallBuffer buf(sv.size());
      auto u = buf.span();
      for (std::size_t i = 0; i < sv.size(); ++i) u[i] = r[i] + sv[i];
      fn(u, x, law, o);
    };
  };
  CoefficientModel out = model;
  out.drift = fold(model.qp->drift_rep);
  out.diffusion = fold(model.qp->diffusion_rep);
  out.qp->drift_rep = shift_rep(model.qp->drift_rep);
  out.qp->diffusion_rep = shift_rep(model.qp->diffusion_rep);
  return out;
}

std::vector<double> eval_drift(const CoefficientModel& model, double t, std::span<const double> x,
                               const EmpiricalMeasure& mu) {
  if (x.size() != model.dim) throw ConstructionError("eval_drift: state dimension mismatch");
  const auto law = summarize(mu);
  std::vector<double> out(model.dim);
  model.drift(t, x, law.view(), out);
  check_finite(out, "drift", t, x);
  return out;
}

std::vector<double> eval_diffusion(const CoefficientModel& model, double t, std::span<const double> x,
                                   const EmpiricalMeasure& mu) {
  if (x.size() != model.dim) throw ConstructionError("eval_diffusion: state dimension mismatch");
  const auto law = summarize(mu);
  std::vector<double> out(model.dim * model.noise_dim);
  model.diffusion(t, x, law.view(), out);
  check_finite(out, "diffusion", t, x);
  return out;
}

std::vector<double> eval_qp_drift(const CoefficientModel& model, std::span<const double> s,
                                  std::span<const double> x, const EmpiricalMeasure& mu) {
  if (!model.qp) throw UnsupportedModelError("model '" + model.label + "' has no quasi-periodic representation");
  if (s.size() != model.qp->periods.size()) throw ConstructionError("eval_qp_drift: torus dimension mismatch");
  const auto law = summarize(mu);
  std::vector<double> out(model.dim);
  model.qp->drift_rep(s, x, law.view(), out);
  check_finite(out, "quasi-periodic drift", s.empty() ? 0.0 : s[0], x);
  return out;
}

std::vector<double> eval_qp_diffusion(const CoefficientModel& model, std::span<const double> s,
                                      std::span<const double> x, const EmpiricalMeasure& mu) {
  if (!model.qp) throw UnsupportedModelError("model '" + model.label + "' has no quasi-periodic representation");
  if (s.size() != model.qp->periods.size()) throw ConstructionError("eval_qp_diffusion: torus dimension mismatch");
  const auto law = summarize(mu);
  std::vector<double> out(model.dim * model.noise_dim);
  model.qp->diffusion_rep(s, x, law.view(), out);
  check_finite(out, "quasi-periodic diffusion", s.empty() ? 0.0 : s[0], x);
  return out;
}

}  // namespace mckv
