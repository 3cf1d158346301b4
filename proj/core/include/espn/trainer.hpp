#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "espn/config.hpp"
#include "espn/episodes.hpp"
#include "espn/es.hpp"
#include "espn/nncore.hpp"

namespace espn {

/// One update step. Serialized as a JSON-lines record.
struct StepRecord {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;      // mean model on this step's episode
  double train_accuracy = 0.0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double reward_min = 0.0;
  double reward_max = 0.0;
  double grad_norm = 0.0;
  std::vector<double> worker_grad_norms;  // grad_allreduce only
  std::size_t degenerate_shards = 0;
  std::uint64_t evaluations = 0;  // cumulative candidate evaluations
  bool skipped = false;
  std::string skip_reason;
  double wall_time = 0.0;  // seconds for this step
};

struct EpochRecord {
  std::size_t epoch = 0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct EvalResult {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over episodes
  double mean_loss = 0.0;
  std::vector<double> accuracies;
};

struct TrainOptions {
  bool resume = false;                   // continue from output_dir/state.json
  std::optional<std::size_t> stop_after_epoch;  // return after this many epochs in total
  bool run_test = true;                  // final test pass on the test split
  bool write_csv = false;                // also emit metrics.csv
  bool quiet = true;
};

struct TrainResult {
  ParamVector mu;
  std::vector<StepRecord> steps;  // this invocation only
  std::vector<EpochRecord> epochs;
  std::optional<EvalResult> test;
  std::uint64_t total_steps = 0;
  std::uint64_t evaluations = 0;
  std::size_t epochs_completed = 0;
  bool budget_exhausted = false;
};

/// Seeds derived from the run seed, recorded in the run summary.
struct SeedLedger {
  std::uint64_t run = 0;
  std::uint64_t init = 0;
  std::uint64_t population = 0;
  std::uint64_t train_episodes = 0;
  std::uint64_t val_episodes = 0;
  std::uint64_t eval = 0;

  static SeedLedger from(const RunConfig& cfg) noexcept;
};

/// Episodic ES training. Per step: sample a training episode, sample and
/// evaluate the population across the worker pool, reduce, update mu.
/// Per epoch: validate mu on the validation split, checkpoint, append
/// metrics. Files under cfg.output_dir: checkpoint.espn, state.json,
/// metrics.jsonl, summary.json (and metrics.csv on request).
TrainResult train(const RunConfig& cfg, const Dataset& data, const TrainOptions& opts = {});

/// Mean model on cfg.test_episodes episodes of (test_way, shot, eval_query)
/// drawn from `table` with `seed`.
EvalResult evaluate(const ParamVector& mu, const RunConfig& cfg, const ClassTable& table,
                    std::uint64_t seed);

/// Same, for a checkpoint file; errors if its channels disagree with cfg.
EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const RunConfig& cfg,
                               const Dataset& data, Split split);

struct SweepRow {
  std::vector<std::pair<std::string, std::string>> overrides;
  bool ok = false;
  std::string error;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::uint64_t evaluations = 0;
};

/// Cartesian product of "key=v1,v2,..." lines. Single-valued lines fix a key
/// for every run.
std::vector<std::vector<std::pair<std::string, std::string>>> parse_grid(std::string_view text);

/// Runs each grid point sequentially on the shared dataset. A failing run is
/// recorded and the sweep continues. Writes sweep.jsonl and sweep.tsv in
/// base.output_dir.
std::vector<SweepRow> sweep(const RunConfig& base,
                            const std::vector<std::vector<std::pair<std::string, std::string>>>& grid,
                            const Dataset& data, const TrainOptions& opts = {});

std::string step_record_json(const StepRecord& r);

}  // namespace espn
