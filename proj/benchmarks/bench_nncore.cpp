#include <benchmark/benchmark.h>

#include "espn/episodes.hpp"
#include "espn/nncore.hpp"
#include "espn/protonet.hpp"
#include "espn/synthetic.hpp"

namespace {

espn::Tensor4 images(std::size_t batch) {
  espn::Tensor4 t({batch, 1, 32, 32});
  espn::CounterRng rng(1);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform());
  return t;
}

// args: channels, batch
void BM_FirstBlock(benchmark::State& state) {
  const espn::EmbeddingNet net{static_cast<std::size_t>(state.range(0))};
  const auto params = espn::init_params(net, 1);
  const auto x = images(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(espn::conv_block_forward(net, params, 0, x));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_FirstBlock)->Args({16, 100})->Args({64, 100})->Unit(benchmark::kMillisecond);

void BM_Embed(benchmark::State& state) {
  const espn::EmbeddingNet net{static_cast<std::size_t>(state.range(0))};
  const auto params = espn::init_params(net, 1);
  const auto x = images(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(espn::embed(net, params, x));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Embed)
    ->Args({16, 20})
    ->Args({16, 100})
    ->Args({32, 100})
    ->Args({64, 100})
    ->Unit(benchmark::kMillisecond);

// One candidate evaluation: 5-way, shot from arg, 15 queries.
void BM_EpisodeLoss(benchmark::State& state) {
  const espn::EmbeddingNet net{16};
  const auto params = espn::init_params(net, 1);
  const auto table = espn::synthetic::make_table(espn::Split::train, 20, 1);
  espn::CounterRng rng(2);
  const auto ep = espn::sample_episode(table, 5, state.range(0), 15, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(espn::episode_loss(params, net, ep, espn::Metric::euclidean));
}
BENCHMARK(BM_EpisodeLoss)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_SampleEpisode(benchmark::State& state) {
  const auto table = espn::synthetic::make_table(espn::Split::train, 100, 1);
  espn::CounterRng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(espn::sample_episode(table, 5, 5, 15, rng));
}
BENCHMARK(BM_SampleEpisode);

}  // namespace
