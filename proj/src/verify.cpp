#include "mckv/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "mckv/errors.hpp"

namespace mckv {

namespace {

// ---- sinusoid-sum helpers -------------------------------------------------

// Antiderivative of a sinusoid sum, F(t) = c t + sum of integrated terms.
double antiderivative(const ForcingSpec& f, double t) {
  double v = f.constant * t;
  for (const auto& term : f.terms) {
    const double arg = term.frequency * t + term.phase;
    v += term.cosine ? term.amplitude / term.frequency * std::sin(arg) : -term.amplitude / term.frequency * std::cos(arg);
  }
  return v;
}

double oscillation_bound(const ForcingSpec& f) {
  double s = 0.0;
  for (const auto& term : f.terms) s += std::abs(term.amplitude) / term.frequency;
  return s;
}

double smallest_period(const DissipativityProfile& p) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto* f : {&p.alpha, &p.beta, &p.gamma}) {
    for (double tau : f->periods()) m = std::min(m, tau);
  }
  return m;
}

bool time_constant(const DissipativityProfile& p) {
  return p.alpha.terms.empty() && p.beta.terms.empty() && p.gamma.terms.empty();
}

ForcingSpec add(ForcingSpec a, const ForcingSpec& b) {
  a.constant += b.constant;
  a.terms.insert(a.terms.end(), b.terms.begin(), b.terms.end());
  return a;
}

// ---- quadrature -----------------------------------------------------------

using Fn = std::function<double(double)>;

double simpson_step(const Fn& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson with Richardson correction over [a, b], split first into panels of at most `panel`.
double integrate(const Fn& f, double a, double b, double rel_tol, double panel) {
  const auto n = std::max<long long>(8, static_cast<long long>(std::ceil((b - a) / panel)));
  const double h = (b - a) / static_cast<double>(n);
  // coarse pass for the tolerance scale
  std::vector<double> nodes(2 * static_cast<std::size_t>(n) + 1);
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = f(a + 0.5 * h * static_cast<double>(i));
  double coarse = 0.0;
  for (long long i = 0; i < n; ++i) {
    const auto j = 2 * static_cast<std::size_t>(i);
    coarse += h / 6.0 * (nodes[j] + 4.0 * nodes[j + 1] + nodes[j + 2]);
  }
  const double tol = rel_tol * std::max(std::abs(coarse), 1e-300) / static_cast<double>(n);
  double total = 0.0;
  for (long long i = 0; i < n; ++i) {
    const auto j = 2 * static_cast<std::size_t>(i);
    const double x0 = a + h * static_cast<double>(i);
    const double whole = h / 6.0 * (nodes[j] + 4.0 * nodes[j + 1] + nodes[j + 2]);
    total += simpson_step(f, x0, x0 + h, nodes[j], nodes[j + 1], nodes[j + 2], whole, tol, 40);
  }
  return total;
}

// Integral over (-inf, t] of exp(k (A(t) - A(u))) h(u) du where A is the antiderivative of `rate`.
// The rate has negative constant part; the tail beyond the truncation point is below 1e-13 of the
// integrand scale at u = t.
double decaying_integral(const ForcingSpec& rate, double k, double t, double h_sup, double h_floor, const Fn& h,
                         double rel_tol, double panel) {
  const double decay = -rate.constant * k;
  const double osc = 2.0 * k * oscillation_bound(rate);
  const double floor = std::max(h_floor, 1e-300);
  const double span = std::max(1.0, (osc + std::log(std::max(h_sup, floor) / decay) - std::log(1e-13 * floor)) / decay);
  const double at = antiderivative(rate, t);
  const Fn integrand = [&](double u) { return std::exp(k * (at - antiderivative(rate, u))) * h(u); };
  return integrate(integrand, t - span, t, rel_tol, panel);
}

void require_dissipative(const DissipativityProfile& p) {
  const double avg = p.average_dissipation();
  if (!(avg < 0.0)) throw NotDissipativeError(avg);
  if (!(p.alpha.constant < 0.0)) throw NotDissipativeError(p.alpha.constant);
}

double panel_of(const DissipativityProfile& p) {
  const double tau = smallest_period(p);
  return std::isfinite(tau) ? std::min(0.5, tau / 16.0) : 0.5;
}

// Lower bound of h on the line for the tail estimate.
double lower_bound(const DissipativityProfile& p) { return static_cast<double>(p.d) * p.c_sigma_lower; }

double sup_of(const ForcingSpec& f) { return f.sup_abs(); }

}  // namespace

ForcingSpec square(const ForcingSpec& f) {
  ForcingSpec out;
  out.constant = f.constant * f.constant;
  auto push = [&out](double amp, double freq, double phase, bool cosine) {
    if (amp == 0.0) return;
    if (std::abs(freq) < 1e-15) {
      out.constant += cosine ? amp * std::cos(phase) : amp * std::sin(phase);
      return;
    }
    if (freq < 0.0) {
      // cos(-x) = cos x, sin(-x) = -sin x
      freq = -freq;
      phase = -phase;
      if (!cosine) amp = -amp;
    }
    out.terms.push_back({amp, freq, phase, cosine});
  };
  for (const auto& t : f.terms) push(2.0 * f.constant * t.amplitude, t.frequency, t.phase, t.cosine);
  for (std::size_t i = 0; i < f.terms.size(); ++i) {
    for (std::size_t j = 0; j < f.terms.size(); ++j) {
      const auto& a = f.terms[i];
      const auto& b = f.terms[j];
      const double amp = 0.5 * a.amplitude * b.amplitude;
      const double fd = a.frequency - b.frequency, pd = a.phase - b.phase;
      const double fs = a.frequency + b.frequency, ps = a.phase + b.phase;
      if (!a.cosine && !b.cosine) {  // sin sin = (cos(d) - cos(s)) / 2
        push(amp, fd, pd, true);
        push(-amp, fs, ps, true);
      } else if (a.cosine && b.cosine) {  // cos cos = (cos(d) + cos(s)) / 2
        push(amp, fd, pd, true);
        push(amp, fs, ps, true);
      } else if (!a.cosine && b.cosine) {  // sin a cos b = (sin(s) + sin(d)) / 2
        push(amp, fs, ps, false);
        push(amp, fd, pd, false);
      } else {  // cos a sin b = (sin(s) - sin(d)) / 2
        push(amp, fs, ps, false);
        push(-amp, fd, pd, false);
      }
    }
  }
  return out;
}

void DissipativityProfile::validate() const {
  alpha.validate();
  beta.validate();
  gamma.validate();
  if (!(c_sigma > 0.0) || !(c_sigma_lower > 0.0)) throw ConstructionError("profile: c_sigma constants must be positive");
  if (c_sigma < c_sigma_lower) throw ConstructionError("profile: c_sigma must be >= c_sigma_lower");
  if (!(L > 0.0)) throw ConstructionError("profile: L must be positive");
  if (!(kappa >= 1.0)) throw ConstructionError("profile: kappa must be >= 1");
  if (d < 1) throw ConstructionError("profile: d must be >= 1");
  double tau = smallest_period(*this);
  if (!std::isfinite(tau)) tau = 1.0;
  double horizon = 0.0;
  for (const auto* f : {&alpha, &beta, &gamma}) {
    for (double p : f->periods()) horizon = std::max(horizon, p);
  }
  if (horizon == 0.0) horizon = 1.0;
  const int n = 256;
  for (int i = 0; i < n; ++i) {
    const double t = horizon * i / n;
    if (beta.value(t) < -1e-12) throw ConstructionError("profile: beta must be non-negative");
    if (gamma.value(t) < -1e-12) throw ConstructionError("profile: gamma must be non-negative");
  }
}

DissipativityProfile profile_ou(double theta_, double sigma, std::size_t d) {
  DissipativityProfile p;
  p.alpha = ForcingSpec::constant_value(-theta_);
  p.c_sigma = p.c_sigma_lower = sigma * sigma;
  p.L = theta_;
  p.kappa = 1.0;
  p.d = d;
  return p;
}

DissipativityProfile profile_meanfield_ou(double theta_, double coupling, double sigma, std::size_t d) {
  return profile_linear(theta_, coupling, sigma, ForcingSpec::none(), d);
}

DissipativityProfile profile_linear(double theta_, double coupling, double sigma, const ForcingSpec& forcing,
                                    std::size_t d) {
  DissipativityProfile p;
  const double c = std::abs(coupling);
  double eps = 0.0;
  if (forcing.sup_abs() > 0.0) {
    eps = 0.5 * (theta_ - c);
    if (!(eps > 0.0)) throw ConstructionError("profile_linear: forcing needs theta > |coupling|");
  }
  p.alpha = ForcingSpec::constant_value(-theta_ + 0.5 * c + eps);
  p.beta = ForcingSpec::constant_value(0.5 * c);
  if (eps > 0.0) {
    // <x, f> <= eps |x|^2 + d f^2 / (4 eps)
    ForcingSpec g = square(forcing);
    const double scale = static_cast<double>(d) / (4.0 * eps);
    g.constant *= scale;
    for (auto& term : g.terms) term.amplitude *= scale;
    p.gamma = g;
  }
  p.c_sigma = p.c_sigma_lower = sigma * sigma;
  p.L = theta_ + c;
  p.kappa = 1.0;
  p.d = d;
  return p;
}

DissipativityProfile profile_curie_weiss(const CurieWeissParams& cw) {
  DissipativityProfile p;
  const double f = cw.f_sup();
  p.alpha = ForcingSpec::constant_value(-cw.beta * (cw.k + 1.0));
  p.beta = ForcingSpec::constant_value(cw.beta * cw.k);
  p.gamma = ForcingSpec::constant_value(cw.beta * (f * f + 10.0));
  p.c_sigma = p.c_sigma_lower = cw.sigma * cw.sigma;
  p.L = cw.beta * (2.0 + 4.0 * cw.k + f);
  p.kappa = 3.0;
  p.d = 1;
  return p;
}

double theta(const DissipativityProfile& p, double t, double rel_tol) {
  if (!(rel_tol > 0.0)) throw ConstructionError("theta: rel_tol must be positive");
  require_dissipative(p);
  const ForcingSpec rate = add(p.alpha, p.beta);
  const double dc = static_cast<double>(p.d) * p.c_sigma;
  const Fn h = [&](double u) { return 2.0 * p.gamma.value(u) + dc; };
  return decaying_integral(rate, 2.0, t, 2.0 * sup_of(p.gamma) + dc, lower_bound(p), h, rel_tol, panel_of(p));
}

namespace {

// theta_u as a function of u, computed once for time-constant profiles.
Fn theta_function(const DissipativityProfile& p, double rel_tol, double t) {
  if (time_constant(p)) {
    const double v = theta(p, t, rel_tol);
    return [v](double) { return v; };
  }
  return [&p, rel_tol](double u) { return theta(p, u, rel_tol); };
}

double theta_sup_estimate(const DissipativityProfile& p, double t, double rel_tol) {
  // bounded by the value at t times the oscillation factor of the exponential weight
  const double osc = 4.0 * oscillation_bound(add(p.alpha, p.beta));
  return theta(p, t, rel_tol) * std::exp(osc);
}

}  // namespace

double theta_identity_residual(const DissipativityProfile& p, double t, double rel_tol) {
  require_dissipative(p);
  const double target = theta(p, t, rel_tol);
  const double inner_tol = 0.1 * rel_tol;
  const Fn th = theta_function(p, inner_tol, t);
  const double dc = static_cast<double>(p.d) * p.c_sigma;
  const Fn h = [&](double u) { return 2.0 * p.beta.value(u) * th(u) + 2.0 * p.gamma.value(u) + dc; };
  const double h_sup = 2.0 * sup_of(p.beta) * theta_sup_estimate(p, t, inner_tol) + 2.0 * sup_of(p.gamma) + dc;
  const double lhs = decaying_integral(p.alpha, 2.0, t, h_sup, lower_bound(p), h, rel_tol, panel_of(p));
  return std::abs(lhs - target) / target;
}

double a_p_bound(const DissipativityProfile& p, double pw, double t, double rel_tol) {
  if (!(pw >= 2.0)) throw ConstructionError("a_p_bound: p must be >= 2");
  require_dissipative(p);
  const double dc = static_cast<double>(p.d) * p.c_sigma;
  const double inner_tol = 0.1 * rel_tol;
  const Fn th = theta_function(p, inner_tol, t);
  Fn lower_moment;
  if (pw <= 4.0) {
    lower_moment = [&th, pw](double u) { return std::pow(th(u), pw / 2.0 - 1.0); };
  } else if (time_constant(p)) {
    const double v = a_p_bound(p, pw - 2.0, t, inner_tol);
    lower_moment = [v](double) { return v; };
  } else {
    lower_moment = [&p, pw, inner_tol](double u) { return a_p_bound(p, pw - 2.0, u, inner_tol); };
  }
  const Fn h = [&](double u) {
    return pw * (p.beta.value(u) * th(u) + p.gamma.value(u) + 0.5 * (pw - 1.0) * dc) * lower_moment(u);
  };
  const double th_sup = theta_sup_estimate(p, t, inner_tol);
  const double h_sup = pw * (sup_of(p.beta) * th_sup + sup_of(p.gamma) + 0.5 * (pw - 1.0) * dc) *
                       std::pow(std::max(th_sup, 1.0), std::max(1.0, pw / 2.0));
  const double h_floor = pw * 0.5 * (pw - 1.0) * lower_bound(p) * 1e-6;
  return decaying_integral(p.alpha, pw, t, h_sup, h_floor, h, rel_tol, panel_of(p));
}

// ---- assumption sampling ----------------------------------------------------

namespace {

struct TestMeasure {
  std::string name;
  EmpiricalMeasure mu;
  LawSummary law;
  double norm2 = 0.0;  // ||mu||_2
};

std::string fmt_point(std::span<const double> x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ")";
  return os.str();
}

struct Tracker {
  InequalityCheck c;
  double tol;
  void add(double margin, const std::function<std::string()>& witness) {
    ++c.samples;
    if (c.samples == 1 || margin < c.worst_margin) c.worst_margin = margin;
    if (margin < -tol) {
      ++c.violations;
      if (c.witnesses.size() < 5) c.witnesses.push_back(witness() + " margin=" + std::to_string(margin));
    }
  }
};

}  // namespace

AssumptionReport check_assumptions(const CoefficientModel& model, const DissipativityProfile& profile,
                                   const SampleSpec& spec) {
  const std::size_t d = model.dim, m = model.noise_dim;
  if (profile.d != d) throw ConstructionError("check_assumptions: profile dimension does not match the model");

  std::vector<double> times = spec.times;
  if (times.empty()) {
    const double period = model.qp ? model.qp->periods.front() : 2.0 * std::numbers::pi;
    for (int i = 0; i < 64; ++i) times.push_back(period * i / 64.0);
  }
  double radius = spec.radius;
  if (radius <= 0.0) {
    double th = 1.0;
    try {
      th = theta(profile, 0.0, 1e-6);
    } catch (const NotDissipativeError&) {
    }
    radius = 3.0 + 3.0 * std::sqrt(th);
  }

  // state lattice
  std::size_t per_axis = spec.lattice_points;
  if (d > 1) per_axis = std::max<std::size_t>(3, static_cast<std::size_t>(std::pow(2000.0, 1.0 / static_cast<double>(d))));
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= per_axis;
  std::vector<double> lattice(total * d);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t rem = n;
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t k = rem % per_axis;
      rem /= per_axis;
      lattice[n * d + i] = per_axis == 1 ? 0.0 : -radius + 2.0 * radius * static_cast<double>(k) / static_cast<double>(per_axis - 1);
    }
  }
  auto point = [&](std::size_t n) { return std::span<const double>(lattice.data() + n * d, d); };

  // directions
  std::vector<std::vector<double>> dirs;
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> e(d, 0.0);
    e[i] = 1.0;
    dirs.push_back(e);
  }
  if (d > 1) {
    dirs.emplace_back(d, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> e(d, 0.0);
    e[0] = 1.0 / std::sqrt(2.0);
    e[1] = -1.0 / std::sqrt(2.0);
    dirs.push_back(e);
  }

  // test measures
  std::vector<TestMeasure> measures;
  auto add_measure = [&](std::string name, EmpiricalMeasure mu) {
    TestMeasure tm{std::move(name), std::move(mu), {}, 0.0};
    measures.push_back(std::move(tm));
  };
  auto filled = [d](double v) { return std::vector<double>(d, v); };
  add_measure("dirac(0)", EmpiricalMeasure::dirac(filled(0.0)));
  add_measure("dirac(R/3)", EmpiricalMeasure::dirac(filled(radius / 3.0)));
  add_measure("dirac(-R/3)", EmpiricalMeasure::dirac(filled(-radius / 3.0)));
  {
    auto a = filled(-1.0), b = filled(1.0);
    a.insert(a.end(), b.begin(), b.end());
    add_measure("two-atom(-1,1)", EmpiricalMeasure::from_samples(a, d));
    auto c = filled(0.0), e = filled(2.0);
    c.insert(c.end(), e.begin(), e.end());
    add_measure("two-atom(0,2)", EmpiricalMeasure::from_samples(c, d));
  }
  add_measure("gaussian64", gaussian_cloud(filled(0.5), 1.0, 64, spec.seed));
  for (auto& tm : measures) {
    tm.law = summarize(tm.mu);
    tm.norm2 = std::sqrt(tm.law.second_moment);
  }
  const std::size_t nm = measures.size();
  std::vector<double> w2(nm * nm, 0.0);
  for (std::size_t i = 0; i < nm; ++i)
    for (std::size_t j = 0; j < nm; ++j) w2[i * nm + j] = i == j ? 0.0 : wasserstein(measures[i].mu, measures[j].mu, 2.0);

  // pairs of lattice points
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (total <= 64) {
    for (std::size_t i = 0; i < total; ++i)
      for (std::size_t j = 0; j < total; ++j) pairs.emplace_back(i, j);
  } else {
    for (std::size_t i = 0; i < total; ++i)
      for (std::size_t off : {1u, 7u, 31u}) pairs.emplace_back(i, (i + off) % total);
  }

  const double tol = 1e-10;
  Tracker nd_lower{{"nondegeneracy_lower", 0, 0, 0.0, {}}, tol};
  Tracker nd_upper{{"nondegeneracy_upper", 0, 0, 0.0, {}}, tol};
  Tracker sig_lip{{"diffusion_lipschitz", 0, 0, 0.0, {}}, tol};
  Tracker one_sided{{"one_sided_lipschitz", 0, 0, 0.0, {}}, tol};
  Tracker growth{{"polynomial_growth", 0, 0, 0.0, {}}, tol};
  Tracker coercive{{"weak_coercivity", 0, 0, 0.0, {}}, tol};

  std::vector<double> b(d), b2(d), s(d * m), s2(d * m);
  for (double t : times) {
    const double al = profile.alpha.value(t), be = profile.beta.value(t), ga = profile.gamma.value(t);
    for (std::size_t mi = 0; mi < nm; ++mi) {
      const auto& tm = measures[mi];
      const auto law = tm.law.view();
      for (std::size_t n = 0; n < total; ++n) {
        const auto x = point(n);
        model.drift(t, x, law, b);
        model.diffusion(t, x, law, s);
        double xb = 0.0, bn = 0.0, xn = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          xb += x[i] * b[i];
          bn += b[i] * b[i];
          xn += x[i] * x[i];
        }
        auto where = [&] { return "t=" + std::to_string(t) + " x=" + fmt_point(x) + " mu=" + tm.name; };
        coercive.add(al * xn + be * tm.law.second_moment + ga - xb, where);
        growth.add(profile.L * (1.0 + std::pow(std::sqrt(xn), profile.kappa) + std::pow(tm.norm2, profile.kappa)) -
                       std::sqrt(bn),
                   where);
        for (const auto& y : dirs) {
          double q = 0.0;
          // <sigma sigma^T y, y> = |sigma^T y|^2
          for (std::size_t r = 0; r < m; ++r) {
            double sty = 0.0;
            for (std::size_t i = 0; i < d; ++i) sty += s[i * m + r] * y[i];
            q += sty * sty;
          }
          nd_lower.add(q - profile.c_sigma_lower, where);
          nd_upper.add(profile.c_sigma - q, where);
        }
      }
      for (std::size_t mj = 0; mj < nm; ++mj) {
        const auto& tn = measures[mj];
        const double wd = w2[mi * nm + mj];
        for (const auto& [i, j] : pairs) {
          const auto x = point(i), y = point(j);
          model.drift(t, x, law, b);
          model.drift(t, y, tn.law.view(), b2);
          model.diffusion(t, x, law, s);
          model.diffusion(t, y, tn.law.view(), s2);
          double dxy2 = 0.0, inner = 0.0, sd = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double dx = x[k] - y[k];
            dxy2 += dx * dx;
            inner += dx * (b[k] - b2[k]);
          }
          for (std::size_t k = 0; k < d * m; ++k) sd += (s[k] - s2[k]) * (s[k] - s2[k]);
          const double dxy = std::sqrt(dxy2);
          auto where = [&] {
            return "t=" + std::to_string(t) + " x=" + fmt_point(x) + " y=" + fmt_point(y) + " mu=" + tm.name +
                   " nu=" + tn.name;
          };
          one_sided.add(profile.L * (dxy2 + dxy * wd) - inner, where);
          sig_lip.add(profile.L * (dxy + wd) - std::sqrt(sd), where);
        }
      }
    }
  }

  AssumptionReport rep;
  for (auto* tr : {&nd_lower, &nd_upper, &sig_lip, &one_sided, &growth, &coercive}) {
    rep.violation_found = rep.violation_found || tr->c.violations > 0;
    rep.checks.push_back(std::move(tr->c));
  }
  std::size_t samples = 0;
  for (const auto& c : rep.checks) samples += c.samples;
  std::ostringstream os;
  if (rep.violation_found) {
    os << "violations found:";
    for (const auto& c : rep.checks)
      if (c.violations) os << " " << c.name << " (" << c.violations << ")";
  } else {
    os << "no violation found on " << samples << " samples";
  }
  rep.summary = os.str();
  return rep;
}

// ---- Curie-Weiss criteria -----------------------------------------------------

namespace {

void check_anchor(int a) {
  if (a != -1 && a != 0 && a != 1) throw ConstructionError("g_a is defined for a in {-1, 0, 1} only");
}

}  // namespace

double g_a_eval(const CurieWeissParams& cw, int a, double z, double w) {
  check_anchor(a);
  const double f = cw.f_sup(), s2 = cw.sigma * cw.sigma, k = cw.k;
  const double z2 = z * z;
  if (a == 0) return 2.0 * cw.beta * (z2 * z2 + (2.0 * k - 1.0) * z2 - (f + 2.0 * k * w) * z) - s2;
  return 2.0 * cw.beta * (z2 * z2 - 3.0 * z2 * z + 2.0 * (k + 1.0) * z2 - (f + 2.0 * k * w) * z) - s2;
}

double g_a_second_derivative(const CurieWeissParams& cw, int a, double z) {
  check_anchor(a);
  if (a == 0) return 4.0 * cw.beta * (6.0 * z * z + (2.0 * cw.k - 1.0));
  return 4.0 * cw.beta * (6.0 * z * z - 9.0 * z + 2.0 * (cw.k + 1.0));
}

ConvexityResult g_a_convex(const CurieWeissParams& cw, int a) {
  check_anchor(a);
  ConvexityResult r;
  if (a == 0) {
    // 12 z^2 + 2 (2k - 1) is smallest at z = 0
    r.convex = cw.k >= 0.5;
    r.witness_z = 0.0;
  } else {
    // 6z^2 - 9z + 2(k+1) >= 0 for all z iff 81 - 48 (k + 1) <= 0
    r.convex = 81.0 - 48.0 * (cw.k + 1.0) <= 0.0;
    r.witness_z = 0.75;
  }
  r.witness_value = g_a_second_derivative(cw, a, r.witness_z);
  return r;
}

double cw_theta_star() { return (3.0 - std::sqrt(3.0)) / 3.0; }
double cw_cubic_max() { return 2.0 * std::sqrt(3.0) / 9.0; }

CwConditions cw_conditions(const CurieWeissParams& cw, int a, double th) {
  check_anchor(a);
  CwConditions r;
  if (!(th > 0.0)) {
    r.reason = "theta must be positive";
    return r;
  }
  const double f = cw.f_sup(), s2 = cw.sigma * cw.sigma;
  const double k_min = a == 0 ? 0.5 : 11.0 / 16.0;
  r.k_margin = cw.k - k_min;
  r.cubic = a == 0 ? th * th * th - th : th * th * th - 3.0 * th * th + 2.0 * th;
  r.forcing_margin = r.cubic - f;
  r.beta_threshold = r.forcing_margin > 0.0 ? s2 / (2.0 * th * r.forcing_margin) : std::numeric_limits<double>::infinity();
  r.beta_margin = cw.beta - r.beta_threshold;

  const bool band = a == 0 ? th <= 1.0 : (th >= 1.0 && th <= 2.0);
  if (band) {
    r.reason = a == 0 ? "theta in (0, 1]: g_0(theta, theta) < 0 for every beta"
                      : "theta in [1, 2]: g_1(theta, theta) < 0 for every beta";
    return r;
  }
  if (r.k_margin < 0.0) {
    r.reason = a == 0 ? "k < 1/2: g_0 is not convex" : "k < 11/16: g_1 is not convex";
    return r;
  }
  if (!(r.forcing_margin > 0.0)) {
    r.reason = "|f| is not below the cubic at theta";
    return r;
  }
  if (r.beta_margin < 0.0) {
    r.reason = "beta below threshold";
    return r;
  }
  r.satisfied = true;
  r.reason = "all conditions hold";
  return r;
}

std::string cw_regime(const CurieWeissParams& cw) {
  const double ts = cw_theta_star();
  if (cw_conditions(cw, 1, ts).satisfied && cw_conditions(cw, -1, ts).satisfied) return "multistable";
  const bool normalized = std::abs(cw.sigma * cw.sigma - 2.0) < 1e-12;
  if (normalized && cw.f_sup() == 0.0) {
    const double k = cw.k, b = cw.beta;
    const double lhs = cw.k <= 0.5 ? 2.0 * k * std::sqrt(std::numbers::pi * b) * std::exp((1.0 - 2.0 * k) * (1.0 - 2.0 * k) * b / 4.0)
                                   : 2.0 * k * std::sqrt(std::numbers::pi * b);
    if (lhs <= 1.0) return "unique";
  }
  return "indeterminate";
}

BallMembership ball_membership(const MeasureFlow& flow, double a, double th) {
  BallMembership r;
  for (const auto& node : flow.nodes()) r.worst = std::max(r.worst, w1_to_dirac(node, std::span<const double>(&a, 1)));
  r.member = r.worst <= th;
  return r;
}

BistabilityRun multistability_run(const CurieWeissParams& cw, std::span<const double> anchors,
                                  std::span<const double> thetas, Window window, double tol, int max_iter,
                                  const SimConfig& cfg, const FixedPointOptions& options) {
  if (anchors.size() != 2 || thetas.size() != 2) throw ConstructionError("multistability_run needs two anchors and two radii");
  BistabilityRun out;
  auto& rep = out.report;
  rep.separation_lower_bound = std::abs(anchors[0] - anchors[1]) - thetas[0] - thetas[1];
  if (!(thetas[0] + thetas[1] < std::abs(anchors[0] - anchors[1]))) {
    rep.refused = true;
    rep.message = "balls overlap: theta_1 + theta_2 >= |a_1 - a_2|";
    return out;
  }
  const auto model = make_curie_weiss(cw);
  const auto profile = profile_curie_weiss(cw);
  const double theta_a = theta(profile, window.start, 1e-8);
  bool all_ok = true;
  for (std::size_t i = 0; i < 2; ++i) {
    AnchorOutcome ao;
    ao.anchor = anchors[i];
    ao.theta = thetas[i];
    const double r = std::round(anchors[i]);
    if (r == anchors[i] && std::abs(r) <= 1.0) ao.conditions_hold = cw_conditions(cw, static_cast<int>(r), thetas[i]).satisfied;
    const double a = anchors[i];
    auto fp = solve_fixed_point(model, window, std::span<const double>(&a, 1), tol, max_iter, cfg, options);
    ao.converged = fp.report.converged;
    const auto ball = ball_membership(fp.flow, a, thetas[i]);
    ao.worst_w1 = ball.worst;
    ao.in_ball = ball.member;
    for (const auto& node : fp.flow.nodes()) {
      ao.moment_ratio = std::max(ao.moment_ratio, shift_measure(node, -a).moment(2.0) / theta_a);
    }
    ao.fixed_point = std::move(fp.report);
    all_ok = all_ok && ao.conditions_hold && ao.converged && ao.in_ball;
    rep.anchors.push_back(std::move(ao));
    out.flows.push_back(std::move(fp.flow));
  }
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.flows[0].size(); ++i) {
    sep = std::min(sep, wasserstein(out.flows[0].node(i), out.flows[1].eval(out.flows[0].time(i)), 1.0));
  }
  rep.measured_min_separation = sep;
  rep.certified = all_ok && sep >= rep.separation_lower_bound - rep.mc_slack;
  if (!rep.certified) {
    std::ostringstream os;
    os << "not certified:";
    for (const auto& ao : rep.anchors) {
      if (!ao.conditions_hold) os << " conditions fail at anchor " << ao.anchor << ";";
      if (!ao.converged) os << " no convergence at anchor " << ao.anchor << ";";
      if (!ao.in_ball) os << " anchor " << ao.anchor << " leaves its ball;";
    }
    if (sep < rep.separation_lower_bound - rep.mc_slack) os << " separation below bound;";
    rep.message = os.str();
  } else {
    rep.message = "certified";
  }
  return out;
}

}  // namespace mckv
