#include "kernels_detail.hpp"

namespace mckv::kernels::serial {

void euler_maruyama_step(const StepContext& ctx, std::span<double> state) {
  const std::size_t d = ctx.model->dim;
  const std::size_t n = state.size() / d;
  if (n == 0) return;
  const auto sigma = detail::shared_sigma(ctx, state);
  detail::Scratch scratch(d, ctx.model->noise_dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (!detail::step_particle(ctx, i, state.subspan(i * d, d), scratch, sigma)) detail::raise_blow_up(ctx, state, i);
  }
}

void ensemble_summary(std::span<const double> state, std::size_t d, std::span<double> mean, double& second_moment) {
  const std::size_t n = state.size() / d;
  const std::size_t nb = (n + kReductionBlock - 1) / kReductionBlock;
  const std::size_t w = d + 1;
  std::vector<double> blocks(std::max<std::size_t>(nb, 1) * w, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    detail::block_sums(state, d, b * kReductionBlock, std::min(n, (b + 1) * kReductionBlock), &blocks[b * w]);
  }
  detail::tree_combine(blocks, nb, w);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) mean[j] = blocks[j] * inv;
  second_moment = blocks[d] * inv;
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  const std::size_t nb = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> blocks(std::max<std::size_t>(nb, 1), 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    double s = 0.0;
    for (std::size_t i = b * kReductionBlock; i < std::min(n, (b + 1) * kReductionBlock); ++i) s += values[i];
    blocks[b] = s;
  }
  detail::tree_combine(blocks, nb, 1);
  return blocks[0];
}

}  // namespace mckv::kernels::serial
