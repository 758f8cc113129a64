// Serial reference kernels against the OpenMP versions.
#include <vector>

#include <benchmark/benchmark.h>

#include "mckv/kernels.hpp"
#include "mckv/model.hpp"

namespace {

using namespace mckv;

struct Setup {
  CoefficientModel model;
  std::vector<double> state;
  kernels::StepContext ctx;
  std::vector<double> mean{0.0};

  Setup(const CoefficientModel& m, std::size_t n) : model(m), state(n, 0.5) {
    ctx.model = &model;
    ctx.dt = 1e-3;
    ctx.seed = 42;
    ctx.law = {mean, 0.25, nullptr};
  }
};

void BM_StepSerial(benchmark::State& st) {
  Setup s(make_curie_weiss({8.0, 0.7, 1.0, {}}), static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    kernels::serial::euler_maruyama_step(s.ctx, s.state);
    ++s.ctx.step;
    s.ctx.t = static_cast<double>(s.ctx.step) * s.ctx.dt;
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_StepOmp(benchmark::State& st) {
  Setup s(make_curie_weiss({8.0, 0.7, 1.0, {}}), static_cast<std::size_t>(st.range(0)));
  s.ctx.threads = static_cast<int>(st.range(1));
  for (auto _ : st) {
    kernels::euler_maruyama_step(s.ctx, s.state);
    ++s.ctx.step;
    s.ctx.t = static_cast<double>(s.ctx.step) * s.ctx.dt;
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_SummarySerial(benchmark::State& st) {
  std::vector<double> x(static_cast<std::size_t>(st.range(0)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1e-3 * static_cast<double>(i % 997);
  std::vector<double> mean(1);
  double m2 = 0.0;
  for (auto _ : st) {
    kernels::serial::ensemble_summary(x, 1, mean, m2);
    benchmark::DoNotOptimize(m2);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_SummaryOmp(benchmark::State& st) {
  std::vector<double> x(static_cast<std::size_t>(st.range(0)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1e-3 * static_cast<double>(i % 997);
  std::vector<double> mean(1);
  double m2 = 0.0;
  for (auto _ : st) {
    kernels::ensemble_summary(x, 1, mean, m2, static_cast<int>(st.range(1)));
    benchmark::DoNotOptimize(m2);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_StepSerial)->Arg(20000)->Arg(200000);
BENCHMARK(BM_StepOmp)->Args({20000, 1})->Args({20000, 4})->Args({200000, 1})->Args({200000, 4});
BENCHMARK(BM_SummarySerial)->Arg(20000)->Arg(200000);
BENCHMARK(BM_SummaryOmp)->Args({20000, 1})->Args({20000, 4})->Args({200000, 1})->Args({200000, 4});

BENCHMARK_MAIN();
