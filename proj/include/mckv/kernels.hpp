#pragma once

// Hot loops of the particle integrator. The OpenMP versions and the serial
// reference in kernels::serial produce bit-identical results: every particle
// is updated independently and every reduction uses fixed blocks combined
// by a fixed pairwise tree.

#include <cstddef>
#include <cstdint>
#include <span>

#include "mckv/model.hpp"

namespace mckv::kernels {

inline constexpr std::size_t kReductionBlock = 256;

struct StepContext {
  const CoefficientModel* model = nullptr;
  double t = 0.0;
  /// absolute step index; t = step * dt
  std::int64_t step = 0;
  double dt = 0.0;
  bool tamed = false;
  LawView law;
  std::uint64_t seed = 0;
  /// particle i draws from stream stream_offset + i
  std::uint32_t stream_offset = 0;
  /// <= 0 leaves the OpenMP default
  int threads = 0;
};

/// One Euler-Maruyama step of every particle in `state` (N x d, row-major):
/// x + b dt + sigma sqrt(dt) xi, with b replaced by b / (1 + dt |b|) when tamed.
/// Throws BlowUpError when a particle leaves the finite range.
void euler_maruyama_step(const StepContext& ctx, std::span<double> state);

/// Mean (size d) and mean squared norm of the rows of `state`.
void ensemble_summary(std::span<const double> state, std::size_t d, std::span<double> mean, double& second_moment,
                      int threads = 0);

/// Sum with fixed 256-element blocks and a pairwise tree over block sums.
double pairwise_sum(std::span<const double> values, int threads = 0);

namespace serial {
void euler_maruyama_step(const StepContext& ctx, std::span<double> state);
void ensemble_summary(std::span<const double> state, std::size_t d, std::span<double> mean, double& second_moment);
double pairwise_sum(std::span<const double> values);
}  // namespace serial

}  // namespace mckv::kernels
