#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "espn/dist.hpp"
#include "espn/es.hpp"
#include "espn/protonet.hpp"

namespace espn {

inline constexpr const char* kDataRootEnv = "ESPN_DATA_ROOT";

/// Everything one training run needs. Defaults follow the reference
/// schedule: 200 epochs of 100 training episodes and one validation
/// episode, 200 test episodes, 5-way testing.
struct RunConfig {
  ESConfig es{};
  ReduceMode reduce_mode = ReduceMode::grad_allreduce;
  std::size_t threads = 0;  // 0: one per hardware thread, capped at workers

  std::size_t channels = 64;
  Metric metric = Metric::euclidean;

  std::size_t train_way = 5;
  std::size_t test_way = 5;
  std::size_t shot = 5;
  std::size_t query = 15;       // queries per class in training episodes
  std::size_t eval_query = 15;  // queries per class in validation/test episodes

  std::size_t epochs = 200;
  std::size_t episodes_per_epoch = 100;
  std::size_t val_episodes_per_epoch = 1;
  std::size_t test_episodes = 200;

  std::uint64_t seed = 0;       // run seed; every other seed derives from it
  std::uint64_t eval_seed = 0;  // 0: derived from seed
  std::uint64_t eval_budget = 0;  // max candidate evaluations; 0 = unlimited

  std::filesystem::path data_dir;
  std::filesystem::path output_dir = "runs/default";

  void validate() const;
  std::uint64_t resolved_eval_seed() const noexcept;
};

/// Sets one key from its textual value. Unknown keys and malformed values
/// throw ConfigError.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// "key=value" form.
void apply_override(RunConfig& cfg, std::string_view assignment);

RunConfig default_run_config();

/// Flat key=value lines; '#' starts a comment; blank lines ignored.
/// data_dir defaults to $ESPN_DATA_ROOT when set.
RunConfig parse_config(std::string_view text, RunConfig base = default_run_config());
RunConfig load_config(const std::filesystem::path& path);

/// Canonical key=value rendering; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace espn
