#include "mckv/integrate.hpp"

#include <cmath>
#include <sstream>

#include "mckv/errors.hpp"
#include "mckv/kernels.hpp"
#include "mckv/rng.hpp"

namespace mckv {

void SimConfig::validate() const {
  if (n_particles < 2) throw ValidationError("sim.n_particles", "must be at least 2");
  if (n_particles >= kReservedStreamBase) throw ValidationError("sim.n_particles", "too many particles");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("sim.dt", "must be positive");
  if (record_stride < 1) throw ValidationError("sim.record_stride", "must be at least 1");
  if (n_canon > n_particles) throw ValidationError("sim.n_canon", "must not exceed n_particles");
}

std::optional<std::string> dt_advisory(const CoefficientModel& model, const SimConfig& cfg) {
  const double product = cfg.dt * model.lipschitz_scale;
  if (product < 0.5) return std::nullopt;
  std::ostringstream os;
  os << "dt * drift scale = " << product << " >= 0.5 for model '" << model.label
     << "'; explicit stepping may be unstable (consider a smaller dt or the tamed option)";
  return os.str();
}

std::int64_t grid_step(double t, double dt) {
  const double r = t / dt;
  const double k = std::round(r);
  if (!std::isfinite(r) || std::abs(r - k) > 1e-6) {
    throw ConstructionError("time " + std::to_string(t) + " is not a multiple of dt = " + std::to_string(dt));
  }
  return static_cast<std::int64_t>(k);
}

std::vector<double> step_frozen(const CoefficientModel& model, const EmpiricalMeasure& mu, std::span<const double> x,
                                double t, double dt, std::span<const double> dW) {
  if (x.size() != model.dim || dW.size() != model.noise_dim) throw ConstructionError("step_frozen: dimension mismatch");
  const auto law = summarize(mu);
  std::vector<double> b(model.dim), sigma(model.dim * model.noise_dim), out(x.begin(), x.end());
  model.drift(t, x, law.view(), b);
  model.diffusion(t, x, law.view(), sigma);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < model.dim; ++i) {
    double noise = 0.0;
    for (std::size_t r = 0; r < model.noise_dim; ++r) noise += sigma[i * model.noise_dim + r] * dW[r];
    out[i] += b[i] * dt + noise;
    norm2 += out[i] * out[i];
  }
  if (!std::isfinite(norm2)) throw BlowUpError(t + dt, std::sqrt(norm2), t);
  return out;
}

std::vector<double> expand_init(const EmpiricalMeasure& init, std::size_t n) {
  if (init.empty()) throw ConstructionError("initial measure is empty");
  const std::size_t d = init.dim();
  std::vector<double> out;
  if (init.size() == 1) {
    out.reserve(n * d);
    for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), init.point(0).begin(), init.point(0).end());
    return out;
  }
  if (init.size() == n && init.uniform()) return {init.points().begin(), init.points().end()};
  const auto c = canonicalize(init, n);
  return {c.points().begin(), c.points().end()};
}

EmpiricalMeasure gaussian_cloud(std::span<const double> mean, double std_dev, std::size_t n, std::uint64_t seed) {
  const std::size_t d = mean.size();
  if (d == 0 || n == 0) throw ConstructionError("gaussian_cloud: empty mean or size");
  if (n >= kReservedStreamBase) throw ConstructionError("gaussian_cloud: too many atoms");
  std::vector<double> pts(n * d);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    fill_normals({seed, kReservedStreamBase + static_cast<std::uint32_t>(i)}, 0, z);
    for (std::size_t j = 0; j < d; ++j) pts[i * d + j] = mean[j] + std_dev * z[j];
  }
  return EmpiricalMeasure::from_samples(std::move(pts), d);
}

namespace {

EmpiricalMeasure record_node(const std::vector<double>& state, std::size_t d, std::size_t n_canon) {
  return canonicalize(EmpiricalMeasure::from_samples(state, d), n_canon);
}

void check_summary(std::span<const double> mean, double m2, double t) {
  bool ok = std::isfinite(m2);
  for (double v : mean) ok = ok && std::isfinite(v);
  if (!ok) throw BlowUpError(t, std::sqrt(std::abs(m2)), t);
}

}  // namespace

ParticleRun integrate_particles(const CoefficientModel& model, const MeasureFlow* frozen, std::vector<double> particles,
                                double s, double t_end, const SimConfig& cfg, const RunControl& control) {
  cfg.validate();
  const std::size_t d = model.dim;
  if (particles.empty() || particles.size() % d != 0) throw ConstructionError("particle array does not match model dim");
  if (!(t_end >= s)) throw ConstructionError("integration horizon must satisfy t_end >= s");
  if (frozen != nullptr) {
    if (frozen->dim() != d) throw ConstructionError("frozen flow dimension does not match the model");
    if (!frozen->covers(s) || !frozen->covers(t_end)) {
      throw RangeError("frozen flow does not cover [" + std::to_string(s) + ", " + std::to_string(t_end) + "]");
    }
  }
  const std::size_t n = particles.size() / d;
  const std::size_t n_canon = std::min(cfg.canon_size(), n);
  const std::int64_t k0 = grid_step(s, cfg.dt);
  const std::int64_t k1 = grid_step(t_end, cfg.dt);
  const std::int64_t kr = std::isnan(control.record_from) ? k0 : grid_step(control.record_from, cfg.dt);
  if (kr < k0 || kr > k1) throw ConstructionError("recording start lies outside the integration horizon");
  const auto stride = static_cast<std::int64_t>(cfg.record_stride);

  std::vector<EmpiricalMeasure> nodes;
  std::vector<double> mean(d);
  double m2 = 0.0;
  std::optional<EmpiricalMeasure> cloud;

  kernels::StepContext ctx;
  ctx.model = &model;
  ctx.dt = cfg.dt;
  ctx.tamed = cfg.tamed;
  ctx.seed = cfg.seed;
  ctx.stream_offset = control.stream_offset;
  ctx.threads = cfg.threads;

  for (std::int64_t k = k0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (k >= kr && (k - kr) % stride == 0) nodes.push_back(record_node(particles, d, n_canon));
    if (k == k1) break;
    if (model.law_dependent || model.needs_cloud) {
      if (frozen == nullptr) {
        kernels::ensemble_summary(particles, d, mean, m2, cfg.threads);
        if (model.needs_cloud) cloud = EmpiricalMeasure::from_samples(particles, d);
      } else {
        frozen->summary_at(t, mean, m2);
        if (model.needs_cloud) cloud = frozen->eval(t);
      }
      check_summary(mean, m2, t);
    }
    ctx.t = t;
    ctx.step = k;
    ctx.law = {mean, m2, cloud ? &*cloud : nullptr};
    kernels::euler_maruyama_step(ctx, particles);
  }
  ParticleRun out;
  out.flow = MeasureFlow(static_cast<double>(kr) * cfg.dt, cfg.record_spacing(), std::move(nodes));
  out.terminal = std::move(particles);
  return out;
}

MeasureFlow run_selfconsistent(const CoefficientModel& model, const EmpiricalMeasure& init, double s, double t_end,
                               const SimConfig& cfg, const RunControl& control) {
  if (init.dim() != model.dim) throw ConstructionError("initial measure dimension does not match the model");
  return integrate_particles(model, nullptr, expand_init(init, cfg.n_particles), s, t_end, cfg, control).flow;
}

MeasureFlow run_frozen(const CoefficientModel& model, const MeasureFlow& flow, const EmpiricalMeasure& init, double s,
                       double t_end, const SimConfig& cfg, const RunControl& control) {
  if (init.dim() != model.dim) throw ConstructionError("initial measure dimension does not match the model");
  return integrate_particles(model, &flow, expand_init(init, cfg.n_particles), s, t_end, cfg, control).flow;
}

MeasureFlow run_reparameterized(const CoefficientModel& model, std::span<const double> base,
                                const EmpiricalMeasure& init, double s, double t_end, const SimConfig& cfg,
                                const MeasureFlow* frozen, const RunControl& control) {
  const auto rep = reparameterize(model, base);
  if (init.dim() != model.dim) throw ConstructionError("initial measure dimension does not match the model");
  return integrate_particles(rep, frozen, expand_init(init, cfg.n_particles), s, t_end, cfg, control).flow;
}

}  // namespace mckv
