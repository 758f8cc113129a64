#include "mckv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mckv/errors.hpp"
#include "mckv/ot.hpp"
#include "mckv/rng.hpp"

namespace mckv {

namespace {

double norm_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double pow_abs(double v, double p) {
  const double a = std::abs(v);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  return std::pow(a, p);
}

// Cumulative weights with the last entry pinned to exactly 1.
std::vector<double> cumulative(std::span<const double> w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  if (!c.empty()) c.back() = 1.0;
  return c;
}

void require_1d(const EmpiricalMeasure& mu, const char* op) {
  if (mu.dim() != 1) throw ConstructionError(std::string(op) + " requires a one-dimensional measure");
}

}  // namespace

EmpiricalMeasure EmpiricalMeasure::from_samples(std::vector<double> points, std::size_t dim,
                                                std::vector<double> weights) {
  if (dim == 0) throw ConstructionError("measure dimension must be >= 1");
  if (points.empty() || points.size() % dim != 0) {
    throw ConstructionError("measure needs a nonempty point list whose length is a multiple of dim");
  }
  const std::size_t n = points.size() / dim;
  for (double v : points) {
    if (!std::isfinite(v)) throw ConstructionError("measure point is not finite");
  }

  EmpiricalMeasure mu;
  mu.dim_ = dim;
  if (weights.empty()) {
    mu.uniform_ = true;
    weights.assign(n, 1.0 / static_cast<double>(n));
  } else {
    if (weights.size() != n) throw ConstructionError("weight count does not match point count");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConstructionError("measure weight is negative or not finite");
      total += w;
    }
    if (!(total > 0.0)) throw ConstructionError("measure weights sum to zero");
    for (double& w : weights) w /= total;
    mu.uniform_ = std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights.front(); });
    if (mu.uniform_) weights.assign(n, 1.0 / static_cast<double>(n));
  }

  if (dim == 1) {
    if (mu.uniform_) {
      std::sort(points.begin(), points.end());
    } else {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
      std::vector<double> p(n), w(n);
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = points[order[i]];
        w[i] = weights[order[i]];
      }
      points = std::move(p);
      weights = std::move(w);
    }
  }
  mu.points_ = std::move(points);
  mu.weights_ = std::move(weights);
  return mu;
}

EmpiricalMeasure EmpiricalMeasure::from_samples_1d(std::vector<double> points, std::vector<double> weights) {
  return from_samples(std::move(points), 1, std::move(weights));
}

EmpiricalMeasure EmpiricalMeasure::dirac(std::span<const double> location) {
  return from_samples(std::vector<double>(location.begin(), location.end()), location.size());
}

std::vector<double> EmpiricalMeasure::mean() const {
  std::vector<double> m(dim_, 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t k = 0; k < dim_; ++k) m[k] += weights_[i] * points_[i * dim_ + k];
  }
  return m;
}

double EmpiricalMeasure::moment(double p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto x = point(i);
    if (dim_ == 1) {
      s += weights_[i] * pow_abs(x[0], p);
    } else if (p == 2.0) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      s += weights_[i] * r2;
    } else {
      s += weights_[i] * std::pow(norm_of(x), p);
    }
  }
  return s;
}

double EmpiricalMeasure::variance_1d() const {
  const double m = mean()[0];
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += weights_[i] * (points_[i] - m) * (points_[i] - m);
  return s;
}

EmpiricalMeasure shift_measure(const EmpiricalMeasure& mu, std::span<const double> a) {
  if (a.size() != mu.dim()) throw ConstructionError("shift vector dimension does not match measure");
  std::vector<double> pts(mu.points().begin(), mu.points().end());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t k = 0; k < mu.dim(); ++k) pts[i * mu.dim() + k] += a[k];
  }
  if (mu.uniform()) return EmpiricalMeasure::from_samples(std::move(pts), mu.dim());
  return EmpiricalMeasure::from_samples(std::move(pts), mu.dim(),
                                        std::vector<double>(mu.weights().begin(), mu.weights().end()));
}

EmpiricalMeasure shift_measure(const EmpiricalMeasure& mu, double a) {
  std::vector<double> v(mu.dim(), a);
  return shift_measure(mu, v);
}

EmpiricalMeasure reflect(const EmpiricalMeasure& mu) {
  std::vector<double> pts(mu.points().begin(), mu.points().end());
  for (double& v : pts) v = -v;
  if (mu.uniform()) return EmpiricalMeasure::from_samples(std::move(pts), mu.dim());
  return EmpiricalMeasure::from_samples(std::move(pts), mu.dim(),
                                        std::vector<double>(mu.weights().begin(), mu.weights().end()));
}

double quantile(const EmpiricalMeasure& mu, double u) {
  require_1d(mu, "quantile");
  const auto pts = mu.points();
  if (mu.uniform()) {
    const auto n = mu.size();
    const double scaled = std::ceil(u * static_cast<double>(n)) - 1.0;
    const auto idx = static_cast<std::size_t>(std::max(scaled, 0.0));
    return pts[std::min(idx, n - 1)];
  }
  double c = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    c += mu.weight(i);
    if (u <= c) return pts[i];
  }
  return pts.back();
}

EmpiricalMeasure resample_quantile(const EmpiricalMeasure& mu, std::size_t n) {
  require_1d(mu, "resample_quantile");
  if (n == 0) throw ConstructionError("resample size must be positive");
  const auto pts = mu.points();
  std::vector<double> out(n);
  if (mu.uniform()) {
    const auto m = mu.size();
    for (std::size_t i = 0; i < n; ++i) {
      // first atom whose cumulative weight reaches level (i + 1/2)/n, in integers
      const std::size_t idx = ((2 * i + 1) * m + 2 * n - 1) / (2 * n) - 1;
      out[i] = pts[std::min(idx, m - 1)];
    }
  } else {
    const auto c = cumulative(mu.weights());
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      while (j + 1 < c.size() && c[j] < u) ++j;
      out[i] = pts[j];
    }
  }
  return EmpiricalMeasure::from_samples(std::move(out), 1);
}

EmpiricalMeasure resample_systematic(const EmpiricalMeasure& mu, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConstructionError("resample size must be positive");
  const auto c = cumulative(mu.weights());
  const double offset = uniform_pair(NoiseStream{seed, kReservedStreamBase - 1}, 0, 0)[0];
  std::vector<double> out;
  out.reserve(n * mu.dim());
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + offset) / static_cast<double>(n);
    while (j + 1 < c.size() && c[j] < u) ++j;
    const auto p = mu.point(j);
    out.insert(out.end(), p.begin(), p.end());
  }
  return EmpiricalMeasure::from_samples(std::move(out), mu.dim());
}

EmpiricalMeasure canonicalize(const EmpiricalMeasure& mu, std::size_t n) {
  if (mu.uniform() && mu.size() == n) return mu;
  if (mu.dim() == 1) return resample_quantile(mu, n);
  return resample_systematic(mu, n, 0x5eedull);
}

EmpiricalMeasure quantile_interpolate(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double lambda) {
  require_1d(a, "quantile_interpolate");
  require_1d(b, "quantile_interpolate");
  const auto pa = a.points();
  const auto pb = b.points();
  if (a.uniform() && b.uniform() && a.size() == b.size()) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - lambda) * pa[i] + lambda * pb[i];
    return EmpiricalMeasure::from_samples(std::move(out), 1);
  }
  const auto ca = cumulative(a.weights());
  const auto cb = cumulative(b.weights());
  std::vector<double> pts, wts;
  std::size_t i = 0, j = 0;
  double u = 0.0;
  while (i < ca.size() && j < cb.size()) {
    const double next = std::min(ca[i], cb[j]);
    if (next > u) {
      pts.push_back((1.0 - lambda) * pa[i] + lambda * pb[j]);
      wts.push_back(next - u);
    }
    u = next;
    if (ca[i] <= next) ++i;
    if (cb[j] <= next) ++j;
  }
  return EmpiricalMeasure::from_samples(std::move(pts), 1, std::move(wts));
}

EmpiricalMeasure mixture(std::span<const EmpiricalMeasure> parts, std::span<const double> mix_weights) {
  if (parts.empty() || parts.size() != mix_weights.size()) {
    throw ConstructionError("mixture needs one weight per component");
  }
  const std::size_t dim = parts.front().dim();
  std::vector<double> pts, wts;
  bool all_equal = true;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].dim() != dim) throw ConstructionError("mixture components differ in dimension");
    pts.insert(pts.end(), parts[k].points().begin(), parts[k].points().end());
    for (double w : parts[k].weights()) wts.push_back(mix_weights[k] * w);
    all_equal = all_equal && parts[k].uniform() && parts[k].size() == parts.front().size() &&
                mix_weights[k] == mix_weights.front();
  }
  if (all_equal) return EmpiricalMeasure::from_samples(std::move(pts), dim);
  return EmpiricalMeasure::from_samples(std::move(pts), dim, std::move(wts));
}

double wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  if (mu.dim() != 1 || nu.dim() != 1) throw ConstructionError("wasserstein_1d: both measures must be one-dimensional");
  if (p < 1.0) throw ConstructionError("wasserstein_1d: p must be >= 1");
  const auto x = mu.points();
  const auto y = nu.points();
  double total = 0.0;
  if (mu.uniform() && nu.uniform() && mu.size() == nu.size()) {
    for (std::size_t i = 0; i < x.size(); ++i) total += pow_abs(x[i] - y[i], p);
    total /= static_cast<double>(x.size());
  } else {
    const auto cx = cumulative(mu.weights());
    const auto cy = cumulative(nu.weights());
    std::size_t i = 0, j = 0;
    double u = 0.0;
    while (i < cx.size() && j < cy.size()) {
      const double next = std::min(cx[i], cy[j]);
      total += (next - u) * pow_abs(x[i] - y[j], p);
      u = next;
      if (cx[i] <= next) ++i;
      if (cy[j] <= next) ++j;
    }
  }
  if (p == 1.0) return total;
  if (p == 2.0) return std::sqrt(total);
  return std::pow(total, 1.0 / p);
}

double w1_to_dirac(const EmpiricalMeasure& mu, std::span<const double> a) {
  if (a.size() != mu.dim()) throw ConstructionError("w1_to_dirac: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i);
    double r2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) r2 += (x[k] - a[k]) * (x[k] - a[k]);
    s += mu.weight(i) * std::sqrt(r2);
  }
  return s;
}

namespace {

ot::CostMatrix pairwise_cost(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  ot::CostMatrix c{a.size(), b.size(), std::vector<double>(a.size() * b.size())};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.point(i);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const auto y = b.point(j);
      double r2 = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) r2 += (x[k] - y[k]) * (x[k] - y[k]);
      c(i, j) = (p == 2.0) ? r2 : std::pow(std::sqrt(r2), p);
    }
  }
  return c;
}

double bounding_diameter(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const std::size_t d = a.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto* m : {&a, &b}) {
    for (std::size_t i = 0; i < m->size(); ++i) {
      const auto x = m->point(i);
      for (std::size_t k = 0; k < d; ++k) {
        lo[k] = std::min(lo[k], x[k]);
        hi[k] = std::max(hi[k], x[k]);
      }
    }
  }
  double r2 = 0.0;
  for (std::size_t k = 0; k < d; ++k) r2 += (hi[k] - lo[k]) * (hi[k] - lo[k]);
  return std::sqrt(r2);
}

}  // namespace

double wasserstein_nd(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p, const OtOptions& opts) {
  if (mu.dim() != nu.dim()) throw ConstructionError("wasserstein_nd: dimension mismatch");
  if (p < 1.0) throw ConstructionError("wasserstein_nd: p must be >= 1");
  if (opts.method == OtMethod::exact_assignment) {
    if (mu.size() != nu.size() || !mu.uniform() || !nu.uniform()) {
      throw ConstructionError("exact_assignment needs equal-size uniform clouds");
    }
    if (mu.size() > kExactAssignmentLimit) {
      throw SizeLimitError("exact_assignment accepts at most 512 atoms per cloud; subsample the inputs first (got " +
                           std::to_string(mu.size()) + ")");
    }
    const auto res = ot::solve_assignment(pairwise_cost(mu, nu, p));
    const double mean_cost = res.total_cost / static_cast<double>(mu.size());
    return p == 2.0 ? std::sqrt(mean_cost) : std::pow(mean_cost, 1.0 / p);
  }
  double eps = opts.epsilon;
  if (eps <= 0.0) {
    const double diam = bounding_diameter(mu, nu);
    eps = 0.01 * std::max(diam * diam, 1e-12);
  }
  const double s = ot::sinkhorn_divergence(pairwise_cost(mu, nu, p), pairwise_cost(mu, mu, p), pairwise_cost(nu, nu, p),
                                           mu.weights(), nu.weights(), eps, opts.iterations);
  return std::pow(std::max(s, 0.0), 1.0 / p);
}

}  // namespace mckv
