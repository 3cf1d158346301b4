#include "espn/dist.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "espn/error.hpp"

namespace espn {

std::string_view reduce_mode_name(ReduceMode m) noexcept {
  return m == ReduceMode::grad_allreduce ? "grad_allreduce" : "reward_allgather";
}

ReduceMode parse_reduce_mode(std::string_view name) {
  if (name == "grad_allreduce") return ReduceMode::grad_allreduce;
  if (name == "reward_allgather") return ReduceMode::reward_allgather;
  throw ConfigError("unknown reduce_mode '" + std::string(name) +
                    "' (grad_allreduce|reward_allgather)");
}

WorkerPool::WorkerPool(std::size_t workers, std::size_t pop_per_worker, ReduceMode mode,
                       std::size_t threads)
    : workers_(workers), pop_per_worker_(pop_per_worker), mode_(mode) {
  if (workers_ == 0 || pop_per_worker_ == 0) {
    throw ConfigError("worker pool needs at least one worker and one candidate per worker");
  }
  if (threads == 0) {
    threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  threads_ = std::min(threads, workers_);
}

void WorkerPool::parallel_for(std::size_t count,
                              const std::function<void(std::size_t)>& body) const {
  std::size_t failed_at = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  std::mutex mu;
  const auto record = [&](std::size_t i, std::exception_ptr e) {
    std::lock_guard lock(mu);
    if (i < failed_at) {
      failed_at = i;
      failure = e;
    }
  };

  const std::size_t nthreads = std::min(threads_, count);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        record(i, std::current_exception());
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    {
      std::vector<std::jthread> pool;
      pool.reserve(nthreads);
      for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
          for (;;) {
            if (stop.load(std::memory_order_relaxed)) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
              body(i);
            } catch (...) {
              record(i, std::current_exception());
              stop = true;
            }
          }
        });
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

ParallelFor WorkerPool::as_parallel_for() const {
  return [this](std::size_t count, const std::function<void(std::size_t)>& body) {
    parallel_for(count, body);
  };
}

void WorkerPool::check(const ESConfig& cfg) const {
  if (cfg.workers != workers_ || cfg.pop_per_worker != pop_per_worker_) {
    throw ConfigError("worker pool (" + std::to_string(workers_) + " x " +
                      std::to_string(pop_per_worker_) + ") does not match ES config (" +
                      std::to_string(cfg.workers) + " x " + std::to_string(cfg.pop_per_worker) +
                      ")");
  }
}

RewardSummary summarize(std::span<const double> rewards) noexcept {
  RewardSummary s;
  if (rewards.empty()) return s;
  s.min = *std::min_element(rewards.begin(), rewards.end());
  s.max = *std::max_element(rewards.begin(), rewards.end());
  for (const double r : rewards) s.mean += r;
  s.mean /= static_cast<double>(rewards.size());
  for (const double r : rewards) s.std += (r - s.mean) * (r - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(rewards.size()));
  return s;
}

CandidateFitness episode_fitness(const EmbeddingNet& net, const ParamVector& layout,
                                 const Episode& ep, Metric metric) {
  auto batch = std::make_shared<const Tensor4>(Tensor4::concat(ep.support, ep.query));
  return [&net, &layout, &ep, metric, batch](std::span<const float> params, std::size_t) {
    const ParamVector candidate = layout.with_values({params.begin(), params.end()});
    return -episode_loss(candidate, net, ep, *batch, metric).loss;
  };
}

Population evaluate_sharded(const ParamVector& mu, const ESConfig& cfg, std::uint64_t step,
                            const WorkerPool& pool, const CandidateFitness& fitness) {
  pool.check(cfg);
  Population pop = allocate_population(mu.size(), cfg, step);
  // Each worker owns a shard end to end: sample, evaluate, store by global index.
  std::vector<std::size_t> failed_candidate(pool.workers(), std::numeric_limits<std::size_t>::max());
  try {
    pool.parallel_for(pool.workers(), [&](std::size_t w) {
      const std::size_t begin = pool.shard_begin(w), end = pool.shard_end(w);
      fill_rows(pop, cfg, begin, end);
      std::vector<float> x(mu.size());
      for (std::size_t i = begin; i < end; ++i) {
        failed_candidate[w] = i;
        candidate_params(mu.values(), pop, i, x);
        const double r = fitness(x, i);
        if (!std::isfinite(r)) throw NumericalError("non-finite reward", i);
        pop.rewards[i] = r;
      }
      failed_candidate[w] = std::numeric_limits<std::size_t>::max();
    });
  } catch (const std::exception& e) {
    const auto it = std::min_element(failed_candidate.begin(), failed_candidate.end());
    const std::size_t at = *it == std::numeric_limits<std::size_t>::max() ? 0 : *it;
    throw StepAborted(at, e.what());
  }
  return pop;
}

Population evaluate_sharded(const ParamVector& mu, const ESConfig& cfg, std::uint64_t step,
                            const Episode& ep, const EmbeddingNet& net, Metric metric,
                            const WorkerPool& pool) {
  return evaluate_sharded(mu, cfg, step, pool, episode_fitness(net, mu, ep, metric));
}

std::vector<double> allreduce_mean(std::span<const GradientEstimate> grads) {
  if (grads.empty()) return {};
  std::vector<double> out(grads.front().grad.size(), 0.0);
  for (const auto& g : grads) {
    if (g.grad.size() != out.size()) throw ShapeError("allreduce", "gradient lengths differ");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += g.grad[j];
  }
  for (double& v : out) v /= static_cast<double>(grads.size());
  return out;
}

ReducedGradient reduce_gradients(const WorkerPool& pool, const Population& pop,
                                 const ESConfig& cfg) {
  pool.check(cfg);
  if (pop.size != pool.population()) {
    throw ConfigError("population size does not match the worker pool");
  }
  ReducedGradient out;
  const RewardSummary s = summarize(pop.rewards);
  if (pool.mode() == ReduceMode::reward_allgather) {
    out.estimate = wsr_gradient(pop, 0, pop.size);
    out.degenerate_shards = out.estimate.degenerate ? 1 : 0;
    return out;
  }
  out.per_worker.resize(pool.workers());
  pool.parallel_for(pool.workers(), [&](std::size_t w) {
    out.per_worker[w] = wsr_gradient(pop, pool.shard_begin(w), pool.shard_end(w));
  });
  for (const auto& g : out.per_worker) out.degenerate_shards += g.degenerate ? 1 : 0;
  out.estimate.estimator = Estimator::wsr;
  out.estimate.grad = allreduce_mean(out.per_worker);
  out.estimate.population_size_used = pop.size;
  out.estimate.reward_mean = s.mean;
  out.estimate.reward_std = s.std;
  out.estimate.degenerate = out.degenerate_shards == pool.workers();
  return out;
}

CommCost comm_cost(const WorkerPool& pool, std::uint64_t d_phi, std::uint64_t n) {
  const std::uint64_t local = pool.pop_per_worker();
  CommCost c;
  c.grad_allreduce = {"grad_allreduce", local * d_phi, d_phi * 4};
  c.resample_broadcast = {"resample_broadcast", n * d_phi, n * 4};
  c.reward_allgather = {"reward_allgather", local * d_phi, n * 4 + d_phi * 4};
  return c;
}

}  // namespace espn
