#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "espn/episodes.hpp"
#include "espn/es.hpp"
#include "espn/nncore.hpp"
#include "espn/protonet.hpp"

namespace espn {

enum class ReduceMode {
  grad_allreduce,   // per-shard WSR, gradients averaged across workers
  reward_allgather  // rewards gathered, one global WSR
};

std::string_view reduce_mode_name(ReduceMode m) noexcept;
ReduceMode parse_reduce_mode(std::string_view name);

/// Simulated pod: `workers` evaluation units, each owning a contiguous shard
/// of `pop_per_worker` candidates. At most `threads` shards run at once;
/// threads == 1 runs everything on the calling thread.
class WorkerPool {
 public:
  WorkerPool(std::size_t workers, std::size_t pop_per_worker,
             ReduceMode mode = ReduceMode::grad_allreduce, std::size_t threads = 0);

  std::size_t workers() const noexcept { return workers_; }
  std::size_t pop_per_worker() const noexcept { return pop_per_worker_; }
  std::size_t population() const noexcept { return workers_ * pop_per_worker_; }
  ReduceMode mode() const noexcept { return mode_; }
  std::size_t threads() const noexcept { return threads_; }

  std::size_t owner(std::size_t candidate) const noexcept { return candidate / pop_per_worker_; }
  std::size_t shard_begin(std::size_t worker) const noexcept { return worker * pop_per_worker_; }
  std::size_t shard_end(std::size_t worker) const noexcept { return (worker + 1) * pop_per_worker_; }

  /// Runs body(i) for i in [0, count) across up to threads() OS threads.
  /// Exceptions are collected; the one from the lowest index is rethrown
  /// after every thread has joined.
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) const;

  ParallelFor as_parallel_for() const;

  /// Throws ConfigError if the pool and cfg disagree on the shard layout.
  void check(const ESConfig& cfg) const;

 private:
  std::size_t workers_;
  std::size_t pop_per_worker_;
  ReduceMode mode_;
  std::size_t threads_;
};

struct RewardSummary {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

RewardSummary summarize(std::span<const double> rewards) noexcept;

/// Per-candidate fitness hook; the default is -episode_loss.
using CandidateFitness = std::function<double(std::span<const float> params, std::size_t index)>;

/// Builds the standard few-shot fitness for one episode: -loss of the
/// candidate on `ep`, support and query embedded together.
CandidateFitness episode_fitness(const EmbeddingNet& net, const ParamVector& layout,
                                 const Episode& ep, Metric metric);

/// Every worker samples and evaluates its own shard. Rows depend only on
/// (cfg.seed, step, index), so the result is the same for any worker count.
/// A throwing candidate aborts the whole step with StepAborted naming it.
Population evaluate_sharded(const ParamVector& mu, const ESConfig& cfg, std::uint64_t step,
                            const WorkerPool& pool, const CandidateFitness& fitness);

/// Convenience overload evaluating -episode_loss on `ep`.
Population evaluate_sharded(const ParamVector& mu, const ESConfig& cfg, std::uint64_t step,
                            const Episode& ep, const EmbeddingNet& net, Metric metric,
                            const WorkerPool& pool);

struct ReducedGradient {
  GradientEstimate estimate;
  std::vector<GradientEstimate> per_worker;  // grad_allreduce only
  std::size_t degenerate_shards = 0;
};

/// grad_allreduce: each shard runs WSR on its own rewards (local mean and
/// std), then the W gradients are averaged in worker order.
/// reward_allgather: one WSR over the full population.
ReducedGradient reduce_gradients(const WorkerPool& pool, const Population& pop,
                                 const ESConfig& cfg);

/// Mean of per-worker gradient vectors in a fixed order.
std::vector<double> allreduce_mean(std::span<const GradientEstimate> grads);

struct SchemeCost {
  std::string_view scheme;
  std::uint64_t samples_per_worker = 0;  // Gaussian draws per worker per step
  std::uint64_t bytes_per_step = 0;      // communicated per participant
};

struct CommCost {
  SchemeCost grad_allreduce;      // this engine
  SchemeCost resample_broadcast;  // fixed-seed reward broadcast, every worker resamples all
  SchemeCost reward_allgather;    // rewards gathered, no resampling
};

CommCost comm_cost(const WorkerPool& pool, std::uint64_t d_phi, std::uint64_t n);

}  // namespace espn
