#include "espn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "espn/checkpoint.hpp"
#include "espn/dist.hpp"
#include "espn/error.hpp"
#include "espn/protonet.hpp"
#include "json.hpp"

namespace espn {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kCheckpointFile = "checkpoint.espn";
constexpr const char* kStateFile = "state.json";
constexpr const char* kMetricsFile = "metrics.jsonl";
constexpr const char* kSummaryFile = "summary.json";
constexpr const char* kCsvFile = "metrics.csv";

EmbeddingNet net_for(const RunConfig& cfg) {
  EmbeddingNet net;
  net.channels = cfg.channels;
  net.validate();
  return net;
}

json step_json(const StepRecord& r) {
  json j = {{"type", "step"},
            {"step", r.step},
            {"epoch", r.epoch},
            {"train_loss", r.train_loss},
            {"train_accuracy", r.train_accuracy},
            {"reward_mean", r.reward_mean},
            {"reward_std", r.reward_std},
            {"reward_min", r.reward_min},
            {"reward_max", r.reward_max},
            {"grad_norm", r.grad_norm},
            {"worker_grad_norms", r.worker_grad_norms},
            {"degenerate_shards", r.degenerate_shards},
            {"evaluations", r.evaluations},
            {"skipped", r.skipped},
            {"wall_time", r.wall_time}};
  if (r.skipped) j["skip_reason"] = r.skip_reason;
  return j;
}

json ledger_json(const SeedLedger& s) {
  return {{"run", s.run},
          {"init", s.init},
          {"population", s.population},
          {"train_episodes", s.train_episodes},
          {"val_episodes", s.val_episodes},
          {"eval", s.eval}};
}

double finite_or_nan(double v) { return std::isfinite(v) ? v : std::nan(""); }

struct RunState {
  std::size_t epochs_completed = 0;
  std::uint64_t total_steps = 0;
  std::uint64_t evaluations = 0;
};

void write_state(const fs::path& dir, const RunState& st, const RunConfig& cfg) {
  const json j = {{"epochs_completed", st.epochs_completed},
                  {"total_steps", st.total_steps},
                  {"evaluations", st.evaluations},
                  {"config", to_text(cfg)}};
  const fs::path tmp = dir / "state.json.tmp";
  std::ofstream(tmp) << j.dump(1) << '\n';
  fs::rename(tmp, dir / kStateFile);
}

RunState read_state(const fs::path& dir) {
  std::ifstream is(dir / kStateFile);
  if (!is) throw ConfigError("cannot resume: no " + (dir / kStateFile).string());
  json j;
  is >> j;
  return {j.at("epochs_completed").get<std::size_t>(), j.at("total_steps").get<std::uint64_t>(),
          j.at("evaluations").get<std::uint64_t>()};
}

}  // namespace

std::string step_record_json(const StepRecord& r) { return step_json(r).dump(); }

SeedLedger SeedLedger::from(const RunConfig& cfg) noexcept {
  SeedLedger s;
  s.run = cfg.seed;
  s.init = derive_seed(cfg.seed, "init");
  s.population = derive_seed(cfg.seed, "population");
  s.train_episodes = derive_seed(cfg.seed, "episodes.train");
  s.val_episodes = derive_seed(cfg.seed, "episodes.val");
  s.eval = cfg.resolved_eval_seed();
  return s;
}

EvalResult evaluate(const ParamVector& mu, const RunConfig& cfg, const ClassTable& table,
                    std::uint64_t seed) {
  const EmbeddingNet net = net_for(cfg);
  if (mu.size() != net.param_count()) {
    throw ParamSizeError("evaluation parameters do not match a " + std::to_string(cfg.channels) +
                         "-channel network");
  }
  const std::size_t episodes = cfg.test_episodes;
  EvalResult res;
  res.accuracies.assign(episodes, 0.0);
  std::vector<double> losses(episodes, 0.0);
  const WorkerPool pool(std::max<std::size_t>(1, cfg.es.workers), 1, cfg.reduce_mode, cfg.threads);
  pool.parallel_for(episodes, [&](std::size_t i) {
    CounterRng rng(derive_seed(seed, "episode.eval", i));
    const Episode ep = sample_episode(table, cfg.test_way, cfg.shot, cfg.eval_query, rng);
    const EpisodeResult r = episode_loss(mu, net, ep, cfg.metric);
    res.accuracies[i] = r.accuracy;
    losses[i] = r.loss;
  });
  for (std::size_t i = 0; i < episodes; ++i) {
    res.mean_accuracy += res.accuracies[i];
    res.mean_loss += losses[i];
  }
  if (episodes > 0) {
    res.mean_accuracy /= static_cast<double>(episodes);
    res.mean_loss /= static_cast<double>(episodes);
    double var = 0.0;
    for (const double a : res.accuracies) var += (a - res.mean_accuracy) * (a - res.mean_accuracy);
    res.std_accuracy = std::sqrt(var / static_cast<double>(episodes));
  }
  return res;
}

EvalResult evaluate_checkpoint(const fs::path& checkpoint, const RunConfig& cfg,
                               const Dataset& data, Split split) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (ck.channels != cfg.channels) {
    throw ConfigError("checkpoint has " + std::to_string(ck.channels) +
                      " channels, config says " + std::to_string(cfg.channels));
  }
  const ClassTable& table = data.table(split);
  if (table.split() != split || table.size() == 0) {
    throw ConfigError("dataset has no classes for split '" + std::string(split_name(split)) + "'");
  }
  const std::uint64_t seed =
      split == Split::test ? cfg.resolved_eval_seed() : derive_seed(cfg.resolved_eval_seed(), "val");
  return evaluate(ck.params, cfg, table, seed);
}

TrainResult train(const RunConfig& cfg, const Dataset& data, const TrainOptions& opts) {
  cfg.validate();
  if (data.train.size() < cfg.train_way) {
    throw DatasetIntegrityError("training split has " + std::to_string(data.train.size()) +
                                " classes, fewer than train_way");
  }
  const EmbeddingNet net = net_for(cfg);
  const SeedLedger seeds = SeedLedger::from(cfg);
  ESConfig es = cfg.es;
  es.seed = seeds.population;
  const WorkerPool pool(es.workers, es.pop_per_worker, cfg.reduce_mode, cfg.threads);

  fs::create_directories(cfg.output_dir);
  const fs::path ck_path = cfg.output_dir / kCheckpointFile;

  TrainResult out;
  RunState st;
  if (opts.resume) {
    st = read_state(cfg.output_dir);
    const Checkpoint ck = load_checkpoint(ck_path);
    if (ck.channels != cfg.channels) throw ConfigError("resume: checkpoint channel mismatch");
    out.mu = ck.params;
  } else {
    out.mu = init_params(net, seeds.init);
    std::ofstream(cfg.output_dir / kMetricsFile, std::ios::trunc);
  }
  std::ofstream metrics(cfg.output_dir / kMetricsFile, std::ios::app);

  const std::uint64_t step_cost =
      es.estimator == Estimator::finite_diff ? out.mu.size() + 1 : es.population();
  const std::size_t last_epoch =
      opts.stop_after_epoch ? std::min(*opts.stop_after_epoch, cfg.epochs) : cfg.epochs;

  for (std::size_t epoch = st.epochs_completed; epoch < last_epoch && !out.budget_exhausted;
       ++epoch) {
    for (std::size_t e = 0; e < cfg.episodes_per_epoch; ++e) {
      if (cfg.eval_budget > 0 && st.evaluations + step_cost > cfg.eval_budget) {
        out.budget_exhausted = true;
        break;
      }
      const auto t0 = std::chrono::steady_clock::now();
      StepRecord rec;
      rec.step = st.total_steps;
      rec.epoch = epoch;

      CounterRng ep_rng(derive_seed(seeds.train_episodes, "step", rec.step));
      const Episode ep = sample_episode(data.train, cfg.train_way, cfg.shot, cfg.query, ep_rng);
      const Tensor4 batch = Tensor4::concat(ep.support, ep.query);

      try {
        const EpisodeResult mean_res = episode_loss(out.mu, net, ep, batch, cfg.metric);
        rec.train_loss = mean_res.loss;
        rec.train_accuracy = mean_res.accuracy;
        if (!std::isfinite(mean_res.loss)) throw NumericalError("non-finite loss at mean model", 0);
        GradientEstimate grad;
        const ParamVector& mu = out.mu;
        const auto fitness = [&](std::span<const float> params, std::size_t) {
          const ParamVector candidate = mu.with_values({params.begin(), params.end()});
          return -episode_loss(candidate, net, ep, batch, cfg.metric).loss;
        };
        if (es.estimator == Estimator::finite_diff) {
          grad = fd_gradient(
              mu, [&](std::span<const float> p) { return fitness(p, 0); }, es.sigma_fd,
              pool.as_parallel_for());
          rec.reward_mean = grad.reward_mean;
        } else {
          const Population pop = evaluate_sharded(mu, es, rec.step, pool, fitness);
          const RewardSummary s = summarize(pop.rewards);
          rec.reward_mean = s.mean;
          rec.reward_std = s.std;
          rec.reward_min = s.min;
          rec.reward_max = s.max;
          if (es.estimator == Estimator::nes) {
            grad = nes_gradient(pop, es);
          } else {
            ReducedGradient red = reduce_gradients(pool, pop, es);
            for (const auto& g : red.per_worker) rec.worker_grad_norms.push_back(g.norm());
            rec.degenerate_shards = red.degenerate_shards;
            grad = std::move(red.estimate);
          }
        }
        rec.grad_norm = grad.norm();
        out.mu = apply_update(out.mu, grad, es.alpha);
      } catch (const StepAborted& e) {
        rec.skipped = true;
        rec.skip_reason = e.what();
      } catch (const NumericalError& e) {
        rec.skipped = true;
        rec.skip_reason = e.what();
      } catch (const UpdateError& e) {
        rec.skipped = true;
        rec.skip_reason = e.what();
      } catch (const DegenerateVectorError& e) {
        rec.skipped = true;
        rec.skip_reason = e.what();
      }
      st.evaluations += step_cost;
      ++st.total_steps;
      rec.evaluations = st.evaluations;
      rec.train_loss = finite_or_nan(rec.train_loss);
      rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      metrics << step_json(rec).dump() << '\n';
      out.steps.push_back(std::move(rec));
    }

    EpochRecord er;
    er.epoch = epoch;
    if (cfg.val_episodes_per_epoch > 0 && data.validation.size() >= cfg.test_way) {
      double loss = 0.0, acc = 0.0;
      for (std::size_t v = 0; v < cfg.val_episodes_per_epoch; ++v) {
        CounterRng rng(derive_seed(seeds.val_episodes, "epoch", epoch, v));
        const Episode ep = sample_episode(data.validation, cfg.test_way, cfg.shot, cfg.eval_query, rng);
        const EpisodeResult r = episode_loss(out.mu, net, ep, cfg.metric);
        loss += r.loss;
        acc += r.accuracy;
      }
      er.val_loss = loss / static_cast<double>(cfg.val_episodes_per_epoch);
      er.val_accuracy = acc / static_cast<double>(cfg.val_episodes_per_epoch);
    }
    metrics << json{{"type", "epoch"},
                    {"epoch", er.epoch},
                    {"val_loss", er.val_loss},
                    {"val_accuracy", er.val_accuracy},
                    {"steps", st.total_steps},
                    {"evaluations", st.evaluations}}
                   .dump()
            << '\n';
    metrics.flush();
    out.epochs.push_back(er);
    st.epochs_completed = epoch + 1;
    save_checkpoint(ck_path, net, out.mu);
    write_state(cfg.output_dir, st, cfg);
    if (!opts.quiet) {
      std::fprintf(stderr, "epoch %zu  val_acc %.4f  val_loss %.4f  evals %llu\n", epoch + 1,
                   er.val_accuracy, er.val_loss,
                   static_cast<unsigned long long>(st.evaluations));
    }
  }
  if (out.budget_exhausted) {
    save_checkpoint(ck_path, net, out.mu);
    write_state(cfg.output_dir, st, cfg);
  }

  out.total_steps = st.total_steps;
  out.evaluations = st.evaluations;
  out.epochs_completed = st.epochs_completed;

  const bool finished = st.epochs_completed >= cfg.epochs || out.budget_exhausted;
  if (opts.run_test && finished && data.test.size() >= cfg.test_way && cfg.test_episodes > 0) {
    out.test = evaluate(out.mu, cfg, data.test, seeds.eval);
    metrics << json{{"type", "test"},
                    {"mean_accuracy", out.test->mean_accuracy},
                    {"std_accuracy", out.test->std_accuracy},
                    {"mean_loss", out.test->mean_loss},
                    {"episodes", out.test->accuracies.size()}}
                   .dump()
            << '\n';
  }

  json summary = {{"config", to_text(cfg)},
                  {"seeds", ledger_json(seeds)},
                  {"total_steps", st.total_steps},
                  {"evaluations", st.evaluations},
                  {"epochs_completed", st.epochs_completed},
                  {"budget_exhausted", out.budget_exhausted},
                  {"param_count", out.mu.size()}};
  if (out.test) {
    summary["test"] = {{"mean_accuracy", out.test->mean_accuracy},
                       {"std_accuracy", out.test->std_accuracy},
                       {"mean_loss", out.test->mean_loss},
                       {"episodes", out.test->accuracies.size()}};
  }
  std::ofstream(cfg.output_dir / kSummaryFile) << summary.dump(1) << '\n';

  if (opts.write_csv) {
    std::ofstream csv(cfg.output_dir / kCsvFile, opts.resume ? std::ios::app : std::ios::trunc);
    if (!opts.resume) {
      csv << "step,epoch,train_loss,train_accuracy,reward_mean,reward_std,grad_norm,evaluations,"
             "skipped,wall_time\n";
    }
    for (const auto& r : out.steps) {
      csv << r.step << ',' << r.epoch << ',' << r.train_loss << ',' << r.train_accuracy << ','
          << r.reward_mean << ',' << r.reward_std << ',' << r.grad_norm << ',' << r.evaluations
          << ',' << (r.skipped ? 1 : 0) << ',' << r.wall_time << '\n';
    }
  }
  return out;
}

std::vector<std::vector<std::pair<std::string, std::string>>> parse_grid(std::string_view text) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("grid line '" + line + "' is not key=v1,v2");
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::vector<std::string> values;
    std::istringstream vs(line.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      const auto vb = v.find_first_not_of(" \t");
      if (vb == std::string::npos) continue;
      values.push_back(v.substr(vb, v.find_last_not_of(" \t") - vb + 1));
    }
    if (values.empty()) throw ConfigError("grid key '" + key + "' has no values");
    RunConfig probe;
    for (const auto& val : values) set_config_value(probe, key, val);
    axes.emplace_back(std::move(key), std::move(values));
  }
  if (axes.empty()) throw ConfigError("sweep grid is empty");

  std::vector<std::vector<std::pair<std::string, std::string>>> grid{{}};
  for (const auto& [key, values] : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& partial : grid) {
      for (const auto& v : values) {
        auto row = partial;
        row.emplace_back(key, v);
        next.push_back(std::move(row));
      }
    }
    grid = std::move(next);
  }
  return grid;
}

std::vector<SweepRow> sweep(const RunConfig& base,
                            const std::vector<std::vector<std::pair<std::string, std::string>>>& grid,
                            const Dataset& data, const TrainOptions& opts) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  fs::create_directories(base.output_dir);
  std::ofstream jsonl(base.output_dir / "sweep.jsonl", std::ios::trunc);
  std::ofstream tsv(base.output_dir / "sweep.tsv", std::ios::trunc);
  tsv << "run\toverrides\tstatus\tmean_accuracy\tstd_accuracy\tevaluations\n";

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepRow row;
    row.overrides = grid[i];
    std::string label;
    for (const auto& [k, v] : grid[i]) label += (label.empty() ? "" : " ") + k + "=" + v;
    try {
      RunConfig cfg = base;
      for (const auto& [k, v] : grid[i]) set_config_value(cfg, k, v);
      char dir[32];
      std::snprintf(dir, sizeof dir, "run_%03zu", i);
      cfg.output_dir = base.output_dir / dir;
      TrainOptions o = opts;
      o.resume = false;
      o.stop_after_epoch.reset();
      o.run_test = true;
      const TrainResult r = train(cfg, data, o);
      row.evaluations = r.evaluations;
      if (!r.test) throw ConfigError("run produced no test result (empty test split?)");
      row.ok = true;
      row.mean_accuracy = r.test->mean_accuracy;
      row.std_accuracy = r.test->std_accuracy;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    json j = {{"run", i}, {"overrides", label}, {"ok", row.ok}, {"evaluations", row.evaluations}};
    if (row.ok) {
      j["mean_accuracy"] = row.mean_accuracy;
      j["std_accuracy"] = row.std_accuracy;
    } else {
      j["error"] = row.error;
    }
    jsonl << j.dump() << '\n';
    tsv << i << '\t' << label << '\t' << (row.ok ? "ok" : "failed") << '\t' << row.mean_accuracy
        << '\t' << row.std_accuracy << '\t' << row.evaluations << '\n';
    jsonl.flush();
    tsv.flush();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace espn
