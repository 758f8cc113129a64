#include "mckv/lift.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mckv/errors.hpp"
#include "mckv/ot.hpp"

namespace mckv {

namespace {

constexpr double kSnapTolerance = 1e-9;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void check_periods(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin())) {
    throw ConstructionError("torus periods do not match");
  }
}

// Atom at cumulative level u in (0,1): first atom whose cumulative weight reaches u.
std::span<const double> pick(const EmpiricalMeasure& mu, double u) {
  if (mu.uniform()) {
    const auto n = static_cast<double>(mu.size());
    auto idx = static_cast<std::size_t>(std::ceil(u * n)) ;
    idx = idx == 0 ? 0 : idx - 1;
    return mu.point(std::min(idx, mu.size() - 1));
  }
  double cum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    cum += mu.weight(i);
    if (cum >= u) return mu.point(i);
  }
  return mu.point(mu.size() - 1);
}

struct JointSample {
  const TorusPoint* base;
  std::span<const double> x;
};

std::vector<JointSample> stratified_samples(const LiftedMeasure& m, std::size_t k) {
  std::vector<std::size_t> order(m.fibers.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return m.fibers[a].base.coords < m.fibers[b].base.coords; });
  std::vector<std::size_t> counts(order.size(), 0);
  double cum = 0.0;
  std::size_t f = 0;
  std::vector<double> upper(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum += m.fibers[order[i]].weight;
    upper[i] = cum;
  }
  for (std::size_t s = 0; s < k; ++s) {
    const double u = (static_cast<double>(s) + 0.5) / static_cast<double>(k);
    while (f + 1 < order.size() && upper[f] < u) ++f;
    ++counts[f];
  }
  std::vector<JointSample> out;
  out.reserve(k);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& fiber = m.fibers[order[i]];
    for (std::size_t j = 0; j < counts[i]; ++j) {
      const double level = (static_cast<double>(j) + 0.5) / static_cast<double>(counts[i]);
      out.push_back({&fiber.base, pick(fiber.measure, level)});
    }
  }
  return out;
}

}  // namespace

double wrap(double x, double tau) {
  double r = std::fmod(x, tau);
  if (r < 0.0) r += tau;
  if (r >= tau) r = 0.0;
  return r;
}

TorusPoint TorusPoint::make(std::vector<double> coords, std::vector<double> periods) {
  if (coords.size() != periods.size()) throw ConstructionError("torus point and periods differ in length");
  for (double tau : periods) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConstructionError("torus periods must be positive");
  }
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!std::isfinite(coords[i])) throw ConstructionError("torus coordinates must be finite");
    coords[i] = wrap(coords[i], periods[i]);
  }
  return {std::move(coords), std::move(periods)};
}

TorusPoint rotate(const TorusPoint& p, double t) {
  TorusPoint q = p;
  for (std::size_t i = 0; i < q.coords.size(); ++i) q.coords[i] = wrap(t + p.coords[i], p.periods[i]);
  return q;
}

double torus_distance(const TorusPoint& p, const TorusPoint& q) {
  check_periods(p.periods, q.periods);
  double d = 0.0;
  for (std::size_t i = 0; i < p.coords.size(); ++i) {
    const double diff = std::abs(p.coords[i] - q.coords[i]);
    d += std::min(diff, p.periods[i] - diff);
  }
  return d;
}

std::vector<TorusPoint> torus_grid(std::span<const double> periods, std::span<const std::size_t> resolution) {
  if (periods.size() != resolution.size() || periods.empty()) throw ConstructionError("torus_grid: size mismatch");
  std::size_t total = 1;
  for (auto r : resolution) {
    if (r == 0) throw ConstructionError("torus_grid: resolution must be positive");
    total *= r;
  }
  std::vector<TorusPoint> out;
  out.reserve(total);
  std::vector<std::size_t> idx(periods.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::vector<double> c(periods.size());
    for (std::size_t i = 0; i < periods.size(); ++i) {
      c[i] = periods[i] * static_cast<double>(idx[i]) / static_cast<double>(resolution[i]);
    }
    out.push_back(TorusPoint::make(std::move(c), {periods.begin(), periods.end()}));
    for (std::size_t i = periods.size(); i-- > 0;) {
      if (++idx[i] < resolution[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

void LiftedMeasure::validate() const {
  if (fibers.empty()) throw ConstructionError("lifted measure has no fibers");
  double total = 0.0;
  for (const auto& f : fibers) {
    check_periods(f.base.periods, periods);
    if (f.measure.dim() != fibers.front().measure.dim()) throw ConstructionError("fibers differ in dimension");
    if (!(f.weight >= 0.0)) throw ConstructionError("fiber weights must be non-negative");
    total += f.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConstructionError("fiber weights must sum to 1");
}

double LiftedMeasure::second_moment() const {
  double s = 0.0;
  for (const auto& f : fibers) s += f.weight * f.measure.moment(2.0);
  return s;
}

std::vector<double> LiftedMeasure::base_weights() const {
  std::vector<double> w;
  w.reserve(fibers.size());
  for (const auto& f : fibers) w.push_back(f.weight);
  return w;
}

TorusPoint snap_to_grid(const TorusPoint& p, std::span<const std::size_t> grid) {
  if (grid.empty()) return p;
  TorusPoint q = p;
  for (std::size_t i = 0; i < q.coords.size() && i < grid.size(); ++i) {
    if (grid[i] == 0) continue;
    const double h = q.periods[i] / static_cast<double>(grid[i]);
    const double j = std::round(q.coords[i] / h);
    if (std::abs(q.coords[i] - j * h) <= kSnapTolerance * q.periods[i]) {
      const auto idx = static_cast<std::size_t>(j) % grid[i];
      q.coords[i] = q.periods[i] * static_cast<double>(idx) / static_cast<double>(grid[i]);
    }
  }
  return q;
}

void merge_fibers(LiftedMeasure& m, std::size_t n_canon) {
  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < m.fibers.size(); ++i) groups[m.fibers[i].base.coords].push_back(i);
  std::vector<Fiber> merged;
  merged.reserve(groups.size());
  for (auto& [coords, members] : groups) {
    if (members.size() == 1) {
      merged.push_back(std::move(m.fibers[members[0]]));
      continue;
    }
    Fiber f;
    f.base = m.fibers[members[0]].base;
    std::vector<EmpiricalMeasure> parts;
    std::vector<double> w;
    for (auto i : members) {
      f.weight += m.fibers[i].weight;
      parts.push_back(std::move(m.fibers[i].measure));
      w.push_back(m.fibers[i].weight);
    }
    if (f.weight <= 0.0) std::fill(w.begin(), w.end(), 1.0);
    const std::size_t n = n_canon == 0 ? parts.front().size() : n_canon;
    f.measure = canonicalize(mixture(parts, w), n);
    merged.push_back(std::move(f));
  }
  m.fibers = std::move(merged);
}

LiftedMeasure cesaro_lift(const MeasureFlow& flow, double T, std::span<const double> periods,
                          std::span<const std::size_t> grid, std::size_t n_canon) {
  if (!(T > 0.0)) throw ConstructionError("cesaro_lift: T must be positive");
  if (periods.empty()) throw ConstructionError("cesaro_lift: need at least one period");
  if (!flow.covers(-T) || !flow.covers(T)) throw RangeError("cesaro_lift: flow does not cover [-T, T]");
  const double h = flow.dt_grid();
  const auto m_nodes = std::llround(2.0 * T / h);
  if (m_nodes < 1 || std::abs(static_cast<double>(m_nodes) * h - 2.0 * T) > 1e-9 * std::max(1.0, T)) {
    throw ConstructionError("cesaro_lift: the flow grid step must divide 2T");
  }

  LiftedMeasure out;
  out.periods.assign(periods.begin(), periods.end());
  if (grid.empty()) {
    for (double tau : periods) {
      const double r = std::round(tau / h);
      out.grid.push_back(r >= 1.0 && std::abs(r * h - tau) <= 1e-9 * tau ? static_cast<std::size_t>(r) : 0);
    }
  } else {
    out.grid.assign(grid.begin(), grid.end());
  }

  std::map<std::vector<double>, std::vector<double>> groups;  // base -> node times
  for (long long j = 0; j < m_nodes; ++j) {
    const double r = -T + static_cast<double>(j) * h;
    std::vector<double> c(periods.size(), r);
    auto base = snap_to_grid(TorusPoint::make(std::move(c), out.periods), out.grid);
    groups[base.coords].push_back(r);
  }
  const double w_node = 1.0 / static_cast<double>(m_nodes);
  for (auto& [coords, times] : groups) {
    Fiber f;
    f.base = TorusPoint{coords, out.periods};
    f.weight = w_node * static_cast<double>(times.size());
    if (times.size() == 1) {
      f.measure = flow.eval(times[0]);
      if (n_canon != 0) f.measure = canonicalize(f.measure, n_canon);
    } else {
      std::vector<EmpiricalMeasure> parts;
      parts.reserve(times.size());
      for (double r : times) parts.push_back(flow.eval(r));
      const std::vector<double> w(times.size(), 1.0);
      f.measure = canonicalize(mixture(parts, w), n_canon == 0 ? parts.front().size() : n_canon);
    }
    out.fibers.push_back(std::move(f));
  }
  return out;
}

LiftedMeasure lifted_push(const CoefficientModel& model, const LiftedMeasure& mu, double t, const SimConfig& cfg) {
  if (!model.qp) throw UnsupportedModelError("lifted_push needs a quasi-periodic representation");
  if (!(t >= 0.0)) throw ConstructionError("lifted_push: t must be non-negative");
  mu.validate();
  check_periods(model.qp->periods, mu.periods);
  if (t == 0.0) return mu;
  LiftedMeasure out;
  out.periods = mu.periods;
  out.grid = mu.grid;
  out.fibers.reserve(mu.fibers.size());
  RunControl control;
  control.record_from = t;
  for (std::size_t j = 0; j < mu.fibers.size(); ++j) {
    const auto& f = mu.fibers[j];
    SimConfig fcfg = cfg;
    fcfg.seed = mix_seed(cfg.seed, j);
    auto flow = run_reparameterized(model, f.base.coords, f.measure, 0.0, t, fcfg, nullptr, control);
    Fiber g;
    g.base = snap_to_grid(rotate(f.base, t), out.grid);
    g.weight = f.weight;
    g.measure = flow.node(flow.size() - 1);
    out.fibers.push_back(std::move(g));
  }
  merge_fibers(out, cfg.canon_size());
  return out;
}

double lifted_distance(const LiftedMeasure& a, const LiftedMeasure& b, const LiftedDistanceOptions& opts) {
  a.validate();
  b.validate();
  check_periods(a.periods, b.periods);
  if (a.dim() != b.dim()) throw ConstructionError("lifted measures differ in dimension");
  const std::size_t k = opts.samples;
  if (k == 0) throw ConstructionError("lifted_distance: need at least one sample");
  if (opts.method == OtMethod::exact_assignment && k > kExactAssignmentLimit) {
    throw SizeLimitError("lifted_distance: exact assignment accepts at most 512 samples; use fewer samples");
  }
  const auto sa = stratified_samples(a, k);
  const auto sb = stratified_samples(b, k);
  auto cost = [](const JointSample& x, const JointSample& y) {
    const double d0 = torus_distance(*x.base, *y.base);
    double c = d0 * d0;
    for (std::size_t i = 0; i < x.x.size(); ++i) c += (x.x[i] - y.x[i]) * (x.x[i] - y.x[i]);
    return c;
  };
  auto matrix = [&](const std::vector<JointSample>& x, const std::vector<JointSample>& y) {
    ot::CostMatrix m{k, k, std::vector<double>(k * k)};
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) m(i, j) = cost(x[i], y[j]);
    return m;
  };
  const auto cab = matrix(sa, sb);
  if (opts.method == OtMethod::exact_assignment) {
    return std::sqrt(ot::solve_assignment(cab).total_cost / static_cast<double>(k));
  }
  const auto caa = matrix(sa, sa);
  const auto cbb = matrix(sb, sb);
  double eps = opts.epsilon;
  if (eps <= 0.0) {
    double diam2 = *std::max_element(cab.data.begin(), cab.data.end());
    diam2 = std::max({diam2, *std::max_element(caa.data.begin(), caa.data.end()),
                      *std::max_element(cbb.data.begin(), cbb.data.end())});
    eps = 0.01 * std::max(diam2, 1e-12);
  }
  const std::vector<double> w(k, 1.0 / static_cast<double>(k));
  return std::sqrt(ot::sinkhorn_divergence(cab, caa, cbb, w, w, eps, opts.iterations));
}

std::vector<double> invariance_residual(const CoefficientModel& model, const LiftedMeasure& mu,
                                        std::span<const double> times, const SimConfig& cfg,
                                        const LiftedDistanceOptions& opts) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(lifted_distance(lifted_push(model, mu, t, cfg), mu, opts));
  return out;
}

QpRepresentation qp_representation(const CoefficientModel& model, std::span<const TorusPoint> base_grid, Window window,
                                   std::span<const double> anchor, double tol, int max_iter, const SimConfig& cfg,
                                   const FixedPointOptions& options) {
  if (!model.qp) throw UnsupportedModelError("qp_representation needs a quasi-periodic representation");
  if (base_grid.empty()) throw ConstructionError("qp_representation: empty base grid");
  if (!(window.start <= 0.0 && window.end >= 0.0)) throw ConstructionError("qp_representation: window must contain 0");
  QpRepresentation out;
  out.lifted.periods = model.qp->periods;
  out.all_converged = true;
  const double w = 1.0 / static_cast<double>(base_grid.size());
  for (const auto& base : base_grid) {
    check_periods(base.periods, model.qp->periods);
    const auto rep = reparameterize(model, base.coords);
    auto fp = solve_fixed_point(rep, window, anchor, tol, max_iter, cfg, options);
    QpBaseReport r;
    r.base = base;
    r.converged = fp.report.converged;
    r.iterates = fp.report.iterates;
    r.final_residual = fp.report.residuals.empty() ? 0.0 : fp.report.residuals.back();
    out.all_converged = out.all_converged && r.converged;
    out.bases.push_back(std::move(r));
    out.lifted.fibers.push_back({base, w, fp.flow.eval(0.0)});
  }
  return out;
}

}  // namespace mckv
