#include <omp.h>

#include <limits>

#include "kernels_detail.hpp"

namespace mckv::kernels {

namespace {

int team_size(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

}  // namespace

void euler_maruyama_step(const StepContext& ctx, std::span<double> state) {
  const std::size_t d = ctx.model->dim;
  const std::size_t n = state.size() / d;
  if (n == 0) return;
  const auto sigma = detail::shared_sigma(ctx, state);
  std::size_t first_bad = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  const auto ni = static_cast<std::int64_t>(n);

#pragma omp parallel num_threads(team_size(ctx.threads))
  {
    detail::Scratch scratch(d, ctx.model->noise_dim);
    std::size_t local_bad = std::numeric_limits<std::size_t>::max();
#pragma omp for schedule(static)
    for (std::int64_t ii = 0; ii < ni; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      try {
        if (!detail::step_particle(ctx, i, state.subspan(i * d, d), scratch, sigma)) local_bad = std::min(local_bad, i);
      } catch (...) {
#pragma omp critical(mckv_step_failure)
        if (!failure) failure = std::current_exception();
      }
    }
#pragma omp critical(mckv_step_bad)
    first_bad = std::min(first_bad, local_bad);
  }
  if (failure) std::rethrow_exception(failure);
  if (first_bad != std::numeric_limits<std::size_t>::max()) detail::raise_blow_up(ctx, state, first_bad);
}

void ensemble_summary(std::span<const double> state, std::size_t d, std::span<double> mean, double& second_moment,
                      int threads) {
  const std::size_t n = state.size() / d;
  const std::size_t nb = (n + kReductionBlock - 1) / kReductionBlock;
  const std::size_t w = d + 1;
  std::vector<double> blocks(std::max<std::size_t>(nb, 1) * w, 0.0);
  const auto nbi = static_cast<std::int64_t>(nb);
#pragma omp parallel for schedule(static) num_threads(team_size(threads)) if (nb > 4)
  for (std::int64_t bi = 0; bi < nbi; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    detail::block_sums(state, d, b * kReductionBlock, std::min(n, (b + 1) * kReductionBlock), &blocks[b * w]);
  }
  detail::tree_combine(blocks, nb, w);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) mean[j] = blocks[j] * inv;
  second_moment = blocks[d] * inv;
}

double pairwise_sum(std::span<const double> values, int threads) {
  const std::size_t n = values.size();
  const std::size_t nb = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> blocks(std::max<std::size_t>(nb, 1), 0.0);
  const auto nbi = static_cast<std::int64_t>(nb);
#pragma omp parallel for schedule(static) num_threads(team_size(threads)) if (nb > 4)
  for (std::int64_t bi = 0; bi < nbi; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    double s = 0.0;
    for (std::size_t i = b * kReductionBlock; i < std::min(n, (b + 1) * kReductionBlock); ++i) s += values[i];
    blocks[b] = s;
  }
  detail::tree_combine(blocks, nb, 1);
  return blocks[0];
}

}  // namespace mckv::kernels
