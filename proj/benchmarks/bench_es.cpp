#include <benchmark/benchmark.h>

#include "espn/dist.hpp"
#include "espn/es.hpp"
#include "espn/nncore.hpp"
#include "espn/rng.hpp"

namespace {

void BM_Philox(benchmark::State& state) {
  espn::Philox4x32::Counter c{0, 0, 0, 0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(c = espn::Philox4x32::generate(c, {1, 2}));
  }
  state.SetBytesProcessed(state.iterations() * 16);
}
BENCHMARK(BM_Philox);

// D of the 16- and 64-channel networks.
void BM_SampleDisplacement(benchmark::State& state) {
  std::vector<float> row(state.range(0));
  std::uint64_t i = 0;
  for (auto _ : state) {
    espn::sample_displacement(7, 0, i++, 0.01, row);
    benchmark::DoNotOptimize(row.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleDisplacement)->Arg(7184)->Arg(111680);

espn::ESConfig config(std::size_t workers, std::size_t per_worker) {
  espn::ESConfig c;
  c.workers = workers;
  c.pop_per_worker = per_worker;
  c.seed = 3;
  return c;
}

void BM_WsrGradient(benchmark::State& state) {
  const auto mu = espn::ParamVector::flat(state.range(0));
  const auto cfg = config(8, 32);
  auto pop = espn::sample_population(mu, cfg, 0);
  espn::CounterRng rng(1);
  for (auto& r : pop.rewards) r = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(espn::wsr_gradient(pop, cfg));
}
BENCHMARK(BM_WsrGradient)->Arg(7184)->Arg(111680)->Unit(benchmark::kMillisecond);

void BM_ReduceAllreduce(benchmark::State& state) {
  const auto mu = espn::ParamVector::flat(7184);
  const auto cfg = config(8, 32);
  auto pop = espn::sample_population(mu, cfg, 0);
  espn::CounterRng rng(1);
  for (auto& r : pop.rewards) r = rng.normal();
  const espn::WorkerPool pool(8, 32);
  for (auto _ : state) benchmark::DoNotOptimize(espn::reduce_gradients(pool, pop, cfg));
}
BENCHMARK(BM_ReduceAllreduce)->Unit(benchmark::kMillisecond);

// Sampling plus a cheap fitness, to isolate the sharding overhead.
void BM_EvaluateSharded(benchmark::State& state) {
  const std::size_t threads = state.range(0);
  const auto mu = espn::ParamVector::flat(7184);
  const auto cfg = config(8, 32);
  const espn::WorkerPool pool(8, 32, espn::ReduceMode::grad_allreduce, threads);
  const espn::CandidateFitness fitness = [](std::span<const float> z, std::size_t) {
    double s = 0;
    for (const float v : z) s += double(v) * v;
    return -s;
  };
  for (auto _ : state) benchmark::DoNotOptimize(espn::evaluate_sharded(mu, cfg, 0, pool, fitness));
}
BENCHMARK(BM_EvaluateSharded)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
