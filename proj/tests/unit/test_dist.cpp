#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "espn/dist.hpp"
#include "espn/error.hpp"
#include "espn/synthetic.hpp"
#include "test_util.hpp"

namespace espn {
namespace {

ESConfig config(std::size_t workers, std::size_t per_worker, double sigma = 0.05, std::uint64_t seed = 3) {
  ESConfig c;
  c.workers = workers;
  c.pop_per_worker = per_worker;
  c.sigma = sigma;
  c.seed = seed;
  return c;
}

CandidateFitness from(const testing::Quadratic& f) {
  return [&f](std::span<const float> z, std::size_t) { return f(z); };
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(WorkerPool, ShardArithmetic) {
  const WorkerPool pool(8, 8);
  EXPECT_EQ(pool.population(), 64u);
  EXPECT_EQ(pool.owner(0), 0u);
  EXPECT_EQ(pool.owner(7), 0u);
  EXPECT_EQ(pool.owner(8), 1u);
  EXPECT_EQ(pool.owner(63), 7u);
  EXPECT_EQ(pool.shard_begin(3), 24u);
  EXPECT_EQ(pool.shard_end(3), 32u);
  EXPECT_THROW(pool.check(config(4, 16)), ConfigError);
}

TEST(EvaluateSharded, EachWorkerEvaluatesItsShardOnce) {
  testing::Quadratic f(10, 1);
  const WorkerPool pool(8, 8, ReduceMode::grad_allreduce, 4);
  std::vector<std::atomic<int>> calls(64);
  const Population pop = evaluate_sharded(ParamVector::flat(10), config(8, 8), 0, pool,
                                          [&](std::span<const float> z, std::size_t i) {
                                            ++calls[i];
                                            return f(z);
                                          });
  for (const auto& c : calls) EXPECT_EQ(c.load(), 1);
  for (const double r : pop.rewards) EXPECT_TRUE(std::isfinite(r));
}

TEST(EvaluateSharded, RewardsIdenticalForOneOrEightWorkers) {
  const ClassTable t = synthetic::make_table(Split::train, 10, 1);
  CounterRng rng(4);
  const Episode ep = sample_episode(t, 3, 1, 2, rng);
  EmbeddingNet net{4};
  const ParamVector mu = init_params(net, 2);
  const Population one = evaluate_sharded(mu, config(1, 16, 0.01), 5, ep, net, Metric::euclidean,
                                          WorkerPool(1, 16));
  const Population eight = evaluate_sharded(mu, config(8, 2, 0.01), 5, ep, net, Metric::euclidean,
                                            WorkerPool(8, 2, ReduceMode::grad_allreduce, 3));
  EXPECT_EQ(one.rewards, eight.rewards);
  EXPECT_EQ(one.displacements, eight.displacements);
}

TEST(EvaluateSharded, ZeroDisplacementScoresTheMeanModel) {
  const ClassTable t = synthetic::make_table(Split::train, 10, 1);
  CounterRng rng(4);
  const Episode ep = sample_episode(t, 3, 2, 2, rng);
  EmbeddingNet net{4};
  const ParamVector mu = init_params(net, 2);
  const CandidateFitness fit = episode_fitness(net, mu, ep, Metric::euclidean);
  Population pop = allocate_population(mu.size(), config(1, 4), 0);
  fill_rows(pop, config(1, 4), 0, 4);
  std::fill(pop.row(2).begin(), pop.row(2).end(), 0.0f);
  std::vector<float> x(mu.size());
  candidate_params(mu.values(), pop, 2, x);
  EXPECT_EQ(fit(x, 2), -episode_loss(mu, net, ep, Metric::euclidean).loss);
}

TEST(EvaluateSharded, FailureAbortsWithLowestCandidate) {
  testing::Quadratic f(6, 1);
  const ParamVector mu = ParamVector::flat(6, 0.25f);
  for (const std::size_t threads : {1u, 4u}) {
    const WorkerPool pool(4, 16, ReduceMode::grad_allreduce, threads);
    try {
      evaluate_sharded(mu, config(4, 16), 0, pool, [&](std::span<const float> z, std::size_t i) {
        if (i == 50 || i == 37) throw std::runtime_error("device lost");
        return f(z);
      });
      FAIL();
    } catch (const StepAborted& e) {
      EXPECT_EQ(e.candidate(), 37u);
    }
    try {
      evaluate_sharded(mu, config(4, 16), 0, pool, [&](std::span<const float> z, std::size_t i) {
        return i == 9 ? std::numeric_limits<double>::quiet_NaN() : f(z);
      });
      FAIL();
    } catch (const StepAborted& e) {
      EXPECT_EQ(e.candidate(), 9u);
    }
  }
  for (const float v : mu.values()) EXPECT_EQ(v, 0.25f);
}

TEST(ReduceGradients, SingleWorkerModesAgree) {
  testing::Quadratic f(12, 2);
  const ParamVector mu = ParamVector::flat(12);
  const ESConfig c = config(1, 64);
  const Population pop = evaluate_sharded(mu, c, 0, WorkerPool(1, 64), from(f));
  const auto a = reduce_gradients(WorkerPool(1, 64, ReduceMode::grad_allreduce), pop, c);
  const auto b = reduce_gradients(WorkerPool(1, 64, ReduceMode::reward_allgather), pop, c);
  EXPECT_LE(max_abs_diff(a.estimate.grad, b.estimate.grad), 1e-9);
}

TEST(ReduceGradients, AllgatherEqualsSingleWorkerWsr) {
  testing::Quadratic f(16, 3);
  const ParamVector mu = ParamVector::flat(16, 0.1f);
  const ESConfig c = config(8, 32);
  const WorkerPool pool(8, 32, ReduceMode::reward_allgather, 2);
  const Population pop = evaluate_sharded(mu, c, 1, pool, from(f));
  ESConfig flat = c;
  flat.workers = 1;
  flat.pop_per_worker = 256;
  Population serial = sample_population(mu, flat, 1);
  evaluate_population(mu, serial, f);
  EXPECT_EQ(serial.rewards, pop.rewards);
  EXPECT_LE(max_abs_diff(reduce_gradients(pool, pop, c).estimate.grad, wsr_gradient(serial, flat).grad), 1e-7);
}

TEST(ReduceGradients, AllreduceIsMeanOfShardGradients) {
  testing::Quadratic f(9, 4);
  const ParamVector mu = ParamVector::flat(9);
  const ESConfig c = config(4, 16);
  const WorkerPool pool(4, 16);
  const Population pop = evaluate_sharded(mu, c, 0, pool, from(f));
  const ReducedGradient r = reduce_gradients(pool, pop, c);
  ASSERT_EQ(r.per_worker.size(), 4u);
  for (std::size_t w = 0; w < 4; ++w) {
    const GradientEstimate local = wsr_gradient(pop, pool.shard_begin(w), pool.shard_end(w));
    EXPECT_EQ(local.grad, r.per_worker[w].grad);
  }
  for (std::size_t j = 0; j < 9; ++j) {
    double s = 0;
    for (const auto& g : r.per_worker) s += g.grad[j];
    EXPECT_NEAR(r.estimate.grad[j], s / 4, 1e-7);
  }
}

TEST(ReduceGradients, MirroredShardsMakeModesCoincide) {
  const std::size_t d = 5, m = 6;
  Population pop;
  pop.size = 2 * m;
  pop.dim = d;
  pop.displacements.resize(pop.size * d);
  pop.rewards.resize(pop.size);
  pop.candidate_seeds.resize(pop.size);
  CounterRng rng(8);
  for (std::size_t i = 0; i < m; ++i) {
    pop.rewards[i] = pop.rewards[m + (m - 1 - i)] = rng.normal();
    for (std::size_t j = 0; j < d; ++j) {
      const float e = float(rng.normal() * 0.1);
      pop.row(i)[j] = e;
      pop.row(m + i)[j] = -e;
    }
  }
  const ESConfig c = config(2, m);
  const auto a = reduce_gradients(WorkerPool(2, m, ReduceMode::grad_allreduce), pop, c);
  const auto b = reduce_gradients(WorkerPool(2, m, ReduceMode::reward_allgather), pop, c);
  EXPECT_LE(max_abs_diff(a.estimate.grad, b.estimate.grad), 1e-6);
}

TEST(ReduceGradients, ModesDifferButAlign) {
  testing::Quadratic f(20, 5);
  const ParamVector mu = ParamVector::flat(20);
  const ESConfig c = config(4, 1024);
  const Population pop = evaluate_sharded(mu, c, 0, WorkerPool(4, 1024), from(f));
  const auto a = reduce_gradients(WorkerPool(4, 1024, ReduceMode::grad_allreduce), pop, c);
  const auto b = reduce_gradients(WorkerPool(4, 1024, ReduceMode::reward_allgather), pop, c);
  EXPECT_NE(a.estimate.grad, b.estimate.grad);
  EXPECT_GT(testing::cosine(a.estimate.grad, b.estimate.grad), 0.9);
}

TEST(ReduceGradients, DegenerateShardContributesZero) {
  const ParamVector mu = ParamVector::flat(4);
  const ESConfig c = config(2, 8);
  const WorkerPool pool(2, 8);
  const Population pop = evaluate_sharded(mu, c, 0, pool, [](std::span<const float> z, std::size_t i) {
    return i < 8 ? 1.0 : double(z[0]);
  });
  const ReducedGradient r = reduce_gradients(pool, pop, c);
  EXPECT_EQ(r.degenerate_shards, 1u);
  EXPECT_TRUE(r.per_worker[0].degenerate);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(r.estimate.grad[j], r.per_worker[1].grad[j] / 2);
}

// Workers finish in scrambled order; the reduction does not care.
TEST(ReduceGradients, ArrivalOrderInvariant) {
  testing::Quadratic f(10, 6);
  const ParamVector mu = ParamVector::flat(10);
  const ESConfig c = config(8, 8);
  const auto run = [&](std::size_t threads, bool jitter) {
    const WorkerPool pool(8, 8, ReduceMode::grad_allreduce, threads);
    const Population pop = evaluate_sharded(mu, c, 2, pool, [&](std::span<const float> z, std::size_t i) {
      if (jitter) std::this_thread::sleep_for(std::chrono::microseconds((63 - i) * 20));
      return f(z);
    });
    return reduce_gradients(pool, pop, c).estimate.grad;
  };
  const auto base = run(1, false);
  EXPECT_EQ(run(8, true), base);
  EXPECT_EQ(run(3, true), base);
}

TEST(CommCost, Examples) {
  const CommCost one = comm_cost(WorkerPool(1, 64), 100000, 64);
  EXPECT_EQ(one.grad_allreduce.samples_per_worker, one.resample_broadcast.samples_per_worker);

  const CommCost w4 = comm_cost(WorkerPool(4, 64), 100000, 256);
  const CommCost w8 = comm_cost(WorkerPool(8, 64), 100000, 512);
  EXPECT_EQ(w8.resample_broadcast.samples_per_worker, 2 * w4.resample_broadcast.samples_per_worker);
  EXPECT_EQ(w8.grad_allreduce.samples_per_worker, w4.grad_allreduce.samples_per_worker);

  const CommCost w32 = comm_cost(WorkerPool(32, 64), 100000, 2048);
  EXPECT_EQ(w32.resample_broadcast.samples_per_worker / w32.grad_allreduce.samples_per_worker, 32u);
  EXPECT_EQ(w32.grad_allreduce.bytes_per_step, 400000u);
  EXPECT_EQ(w32.resample_broadcast.bytes_per_step, 2048u * 4);
  EXPECT_EQ(w32.reward_allgather.bytes_per_step, 2048u * 4 + 400000u);
}

TEST(Summarize, Basic) {
  const std::vector<double> r{1, 2, 3, 6};
  const RewardSummary s = summarize(r);
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 6.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(3.5));
}

}  // namespace
}  // namespace espn
