#include "mckv/flow.hpp"

#include <algorithm>
#include <cmath>

#include "mckv/errors.hpp"

namespace mckv {

namespace {

constexpr double kGridSnap = 1e-9;
constexpr double kPeriodTolerance = 1e-9;

}  // namespace

MeasureFlow::MeasureFlow(double t_start, double dt_grid, std::vector<EmpiricalMeasure> measures,
                         FlowExtension extension)
    : t_start_(t_start), dt_grid_(dt_grid), measures_(std::move(measures)) {
  if (measures_.empty()) throw ConstructionError("a measure flow needs at least one node");
  if (!(dt_grid > 0.0) || !std::isfinite(dt_grid)) throw ConstructionError("flow grid step must be positive");
  const std::size_t d = measures_.front().dim();
  const std::size_t n = measures_.front().size();
  for (const auto& m : measures_) {
    if (m.dim() != d) throw ConstructionError("flow nodes differ in dimension");
    if (m.size() != n) throw ConstructionError("flow nodes differ in particle count");
  }
  set_extension(extension);

  means_.resize(measures_.size() * d);
  second_.resize(measures_.size());
  for (std::size_t i = 0; i < measures_.size(); ++i) {
    const auto m = measures_[i].mean();
    std::copy(m.begin(), m.end(), means_.begin() + static_cast<std::ptrdiff_t>(i * d));
    second_[i] = measures_[i].moment(2.0);
  }
  quantile_pairs_ = d == 1 && std::all_of(measures_.begin(), measures_.end(), [](const auto& m) { return m.uniform(); });
  if (quantile_pairs_) {
    cross_.resize(measures_.size() > 0 ? measures_.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < measures_.size(); ++i) {
      const auto a = measures_[i].points();
      const auto b = measures_[i + 1].points();
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
      cross_[i] = s / static_cast<double>(a.size());
    }
  }
}

void MeasureFlow::set_extension(FlowExtension ext) {
  if (ext.kind == ExtensionKind::periodic) {
    if (!(ext.period > 0.0)) throw ConstructionError("periodic extension needs a positive period");
    const double len = t_end() - t_start_;
    const double cycles = std::round(len / ext.period);
    if (cycles < 1.0 || std::abs(len - cycles * ext.period) > kPeriodTolerance) {
      throw ConstructionError("periodic extension requires the window length to be a multiple of the period");
    }
  }
  extension_ = ext;
}

bool MeasureFlow::covers(double t) const {
  if (extension_.kind != ExtensionKind::none) return true;
  const double eps = kGridSnap * dt_grid_;
  return t >= t_start_ - eps && t <= t_end() + eps;
}

double MeasureFlow::fold(double t) const {
  const double eps = kGridSnap * dt_grid_;
  const double end = t_end();
  if (t >= t_start_ - eps && t <= end + eps) return std::clamp(t, t_start_, end);
  switch (extension_.kind) {
    case ExtensionKind::none:
      throw RangeError("time " + std::to_string(t) + " is outside the flow window [" + std::to_string(t_start_) +
                       ", " + std::to_string(end) + "] and the flow has no extension rule");
    case ExtensionKind::constant:
      return t < t_start_ ? t_start_ : end;
    case ExtensionKind::periodic: {
      double r = std::fmod(t - t_start_, extension_.period);
      if (r < 0.0) r += extension_.period;
      if (r >= extension_.period) r = 0.0;
      return t_start_ + r;
    }
  }
  return t;
}

MeasureFlow::Located MeasureFlow::locate(double t) const {
  const double x = (fold(t) - t_start_) / dt_grid_;
  const double last = static_cast<double>(measures_.size() - 1);
  if (x <= 0.0) return {0, 0.0};
  if (x >= last) return {measures_.size() - 1, 0.0};
  double base = std::floor(x);
  double lambda = x - base;
  if (lambda > 1.0 - kGridSnap) {
    base += 1.0;
    lambda = 0.0;
  } else if (lambda < kGridSnap) {
    lambda = 0.0;
  }
  return {static_cast<std::size_t>(base), lambda};
}

EmpiricalMeasure MeasureFlow::eval(double t) const {
  const auto loc = locate(t);
  if (loc.lambda == 0.0) return measures_[loc.index];
  if (dim() == 1) return quantile_interpolate(measures_[loc.index], measures_[loc.index + 1], loc.lambda);
  return measures_[loc.lambda < 0.5 ? loc.index : loc.index + 1];
}

void MeasureFlow::summary_at(double t, std::span<double> mean, double& second_moment) const {
  const std::size_t d = dim();
  const auto loc = locate(t);
  const std::size_t i = loc.index;
  if (loc.lambda == 0.0) {
    std::copy_n(means_.begin() + static_cast<std::ptrdiff_t>(i * d), d, mean.begin());
    second_moment = second_[i];
    return;
  }
  const double l = loc.lambda;
  if (d == 1) {
    mean[0] = (1.0 - l) * means_[i] + l * means_[i + 1];
    if (quantile_pairs_) {
      second_moment = (1.0 - l) * (1.0 - l) * second_[i] + 2.0 * l * (1.0 - l) * cross_[i] + l * l * second_[i + 1];
    } else {
      const auto m = quantile_interpolate(measures_[i], measures_[i + 1], l);
      second_moment = m.moment(2.0);
    }
    return;
  }
  const std::size_t j = l < 0.5 ? i : i + 1;
  std::copy_n(means_.begin() + static_cast<std::ptrdiff_t>(j * d), d, mean.begin());
  second_moment = second_[j];
}

EmpiricalMeasure flow_eval(const MeasureFlow& flow, double t) { return flow.eval(t); }

double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  if (mu.dim() == 1 && nu.dim() == 1) return wasserstein_1d(mu, nu, p);
  auto a = mu.size() > kExactAssignmentLimit || !mu.uniform() ? resample_systematic(mu, kExactAssignmentLimit, 11) : mu;
  auto b = nu.size() > kExactAssignmentLimit || !nu.uniform() ? resample_systematic(nu, kExactAssignmentLimit, 13) : nu;
  if (a.size() != b.size()) {
    const std::size_t n = std::min(a.size(), b.size());
    a = resample_systematic(a, n, 11);
    b = resample_systematic(b, n, 13);
  }
  return wasserstein_nd(a, b, p);
}

double flow_seminorm(const MeasureFlow& a, const MeasureFlow& b, double p, int n) {
  if (n < 1) throw ConstructionError("flow_seminorm: window radius must be >= 1");
  const double h = std::min(a.dt_grid(), b.dt_grid());
  const auto steps = static_cast<long long>(std::ceil(2.0 * n / h - kGridSnap));
  double sup = 0.0;
  for (long long j = 0; j <= steps; ++j) {
    const double t = std::min(-static_cast<double>(n) + static_cast<double>(j) * h, static_cast<double>(n));
    sup = std::max(sup, wasserstein(a.eval(t), b.eval(t), p));
  }
  return sup;
}

FlowMetricValue flow_metric(const MeasureFlow& a, const MeasureFlow& b, double p) {
  const double radius = std::max(std::abs(a.t_start()), std::abs(a.t_end()));
  const int n_max = std::max(1, static_cast<int>(std::ceil(radius - kGridSnap)));
  const double h = std::min(a.dt_grid(), b.dt_grid());
  const auto steps = static_cast<long long>(std::ceil(2.0 * n_max / h - kGridSnap));
  // sup over |t| <= n, built up from the distances on the shared grid
  std::vector<double> d_n(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (long long j = 0; j <= steps; ++j) {
    const double t = std::min(-static_cast<double>(n_max) + static_cast<double>(j) * h, static_cast<double>(n_max));
    const double w = wasserstein(a.eval(t), b.eval(t), p);
    const int first = std::max(1, static_cast<int>(std::ceil(std::abs(t) - kGridSnap)));
    for (int n = first; n <= n_max; ++n) d_n[static_cast<std::size_t>(n)] = std::max(d_n[static_cast<std::size_t>(n)], w);
  }
  FlowMetricValue out;
  out.n_max = n_max;
  out.truncation_bound = std::ldexp(1.0, -n_max);
  for (int n = 1; n <= n_max; ++n) {
    const double d = d_n[static_cast<std::size_t>(n)];
    out.value += std::ldexp(1.0, -n) * d / (1.0 + d);
  }
  return out;
}

double window_sup_distance(const MeasureFlow& a, const MeasureFlow& b, double p) {
  double sup = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sup = std::max(sup, wasserstein(a.node(i), b.eval(a.time(i)), p));
  return sup;
}

MeasureFlow constant_flow(const EmpiricalMeasure& mu, Window window, double dt_grid, FlowExtension extension) {
  const auto steps = static_cast<std::size_t>(std::llround(window.length() / dt_grid));
  return MeasureFlow(window.start, dt_grid, std::vector<EmpiricalMeasure>(steps + 1, mu), extension);
}

}  // namespace mckv
