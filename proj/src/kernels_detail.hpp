#pragma once

// Per-particle and per-block pieces shared by the OpenMP and serial kernels.

#include <cmath>
#include <exception>
#include <vector>

#include "mckv/errors.hpp"
#include "mckv/kernels.hpp"
#include "mckv/rng.hpp"

namespace mckv::kernels::detail {

struct Scratch {
  std::vector<double> drift;
  std::vector<double> sigma;
  std::vector<double> noise;
  Scratch(std::size_t d, std::size_t m) : drift(d), sigma(d * m), noise(m) {}
};

/// Advances particle i in place. Returns false when the new state is not finite.
inline bool step_particle(const StepContext& ctx, std::size_t i, std::span<double> x, Scratch& s,
                          std::span<const double> shared_sigma) {
  const auto& model = *ctx.model;
  const std::size_t d = model.dim, m = model.noise_dim;
  model.drift(ctx.t, x, ctx.law, s.drift);
  std::span<const double> sigma = shared_sigma;
  if (sigma.empty()) {
    model.diffusion(ctx.t, x, ctx.law, s.sigma);
    sigma = s.sigma;
  }
  fill_normals({ctx.seed, ctx.stream_offset + static_cast<std::uint32_t>(i)}, ctx.step, s.noise);
  double scale = ctx.dt;
  if (ctx.tamed) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) norm2 += s.drift[j] * s.drift[j];
    scale = ctx.dt / (1.0 + ctx.dt * std::sqrt(norm2));
  }
  const double sq = std::sqrt(ctx.dt);
  bool ok = true;
  for (std::size_t j = 0; j < d; ++j) {
    double dw = 0.0;
    for (std::size_t r = 0; r < m; ++r) dw += sigma[j * m + r] * s.noise[r];
    x[j] += s.drift[j] * scale + dw * sq;
    ok = ok && std::isfinite(x[j]);
  }
  return ok;
}

/// Diffusion evaluated once for the whole step when it depends on t only.
inline std::vector<double> shared_sigma(const StepContext& ctx, std::span<const double> any_state) {
  const auto& model = *ctx.model;
  if (!model.state_independent_diffusion) return {};
  std::vector<double> sigma(model.dim * model.noise_dim);
  model.diffusion(ctx.t, any_state.subspan(0, model.dim), ctx.law, sigma);
  return sigma;
}

[[noreturn]] inline void raise_blow_up(const StepContext& ctx, std::span<const double> state, std::size_t first_bad) {
  const std::size_t d = ctx.model->dim;
  double norm2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) norm2 += state[first_bad * d + j] * state[first_bad * d + j];
  throw BlowUpError(ctx.t + ctx.dt, std::sqrt(norm2), ctx.t);
}

/// Sums of the d coordinates and of |x|^2 over rows [begin, end).
inline void block_sums(std::span<const double> state, std::size_t d, std::size_t begin, std::size_t end,
                       double* out) {
  for (std::size_t j = 0; j <= d; ++j) out[j] = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = state[i * d + j];
      out[j] += v;
      sq += v * v;
    }
    out[d] += sq;
  }
}

/// Combines `count` vectors of `width` in place by a pairwise tree; result lands in the first vector.
inline void tree_combine(std::vector<double>& blocks, std::size_t count, std::size_t width) {
  for (std::size_t stride = 1; stride < count; stride *= 2) {
    for (std::size_t b = 0; b + stride < count; b += 2 * stride) {
      for (std::size_t j = 0; j < width; ++j) blocks[b * width + j] += blocks[(b + stride) * width + j];
    }
  }
}

}  // namespace mckv::kernels::detail
