#include "espn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "espn/episodes.hpp"
#include "espn/error.hpp"

namespace espn {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("bad integer for '" + std::string(key) + "': '" + std::string(v) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError("bad number for '" + std::string(key) + "': '" + s + "'");
  }
  return out;
}

std::string real_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(RunConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define ESPN_SIZE(name, member)                                                   \
  {name,                                                                          \
   {[](RunConfig& c, std::string_view k, std::string_view v) {                    \
      c.member = parse_int<std::size_t>(k, v);                                    \
    },                                                                            \
    [](const RunConfig& c) { return std::to_string(c.member); }}}
#define ESPN_U64(name, member)                                                    \
  {name,                                                                          \
   {[](RunConfig& c, std::string_view k, std::string_view v) {                    \
      c.member = parse_int<std::uint64_t>(k, v);                                  \
    },                                                                            \
    [](const RunConfig& c) { return std::to_string(c.member); }}}
#define ESPN_REAL(name, member)                                                   \
  {name,                                                                          \
   {[](RunConfig& c, std::string_view k, std::string_view v) {                    \
      c.member = parse_real(k, v);                                                \
    },                                                                            \
    [](const RunConfig& c) { return real_text(c.member); }}}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      ESPN_REAL("alpha", es.alpha),
      ESPN_REAL("sigma", es.sigma),
      ESPN_REAL("sigma_fd", es.sigma_fd),
      ESPN_SIZE("pop_per_worker", es.pop_per_worker),
      ESPN_SIZE("workers", es.workers),
      {"estimator",
       {[](RunConfig& c, std::string_view, std::string_view v) { c.es.estimator = parse_estimator(v); },
        [](const RunConfig& c) { return std::string(estimator_name(c.es.estimator)); }}},
      {"reduce_mode",
       {[](RunConfig& c, std::string_view, std::string_view v) { c.reduce_mode = parse_reduce_mode(v); },
        [](const RunConfig& c) { return std::string(reduce_mode_name(c.reduce_mode)); }}},
      ESPN_SIZE("threads", threads),
      ESPN_SIZE("channels", channels),
      {"metric",
       {[](RunConfig& c, std::string_view, std::string_view v) { c.metric = parse_metric(v); },
        [](const RunConfig& c) { return std::string(metric_name(c.metric)); }}},
      ESPN_SIZE("train_way", train_way),
      ESPN_SIZE("test_way", test_way),
      ESPN_SIZE("shot", shot),
      ESPN_SIZE("query", query),
      ESPN_SIZE("eval_query", eval_query),
      ESPN_SIZE("epochs", epochs),
      ESPN_SIZE("episodes_per_epoch", episodes_per_epoch),
      ESPN_SIZE("val_episodes_per_epoch", val_episodes_per_epoch),
      ESPN_SIZE("test_episodes", test_episodes),
      ESPN_U64("seed", seed),
      ESPN_U64("eval_seed", eval_seed),
      ESPN_U64("eval_budget", eval_budget),
      {"data_dir",
       {[](RunConfig& c, std::string_view, std::string_view v) { c.data_dir = std::string(v); },
        [](const RunConfig& c) { return c.data_dir.string(); }}},
      {"output_dir",
       {[](RunConfig& c, std::string_view, std::string_view v) { c.output_dir = std::string(v); },
        [](const RunConfig& c) { return c.output_dir.string(); }}},
  };
  return table;
}

#undef ESPN_SIZE
#undef ESPN_U64
#undef ESPN_REAL

}  // namespace

void RunConfig::validate() const {
  es.validate();
  if (channels == 0) throw ConfigError("channels must be positive");
  if (train_way < 2 || test_way < 2) throw ConfigError("way must be at least 2");
  if (shot == 0) throw ConfigError("shot must be positive");
  if (query == 0 || eval_query == 0) throw ConfigError("query counts must be positive");
  if (shot + std::max(query, eval_query) > kImagesPerClass) {
    throw ConfigError("shot + query exceeds " + std::to_string(kImagesPerClass) + " images per class");
  }
  if (episodes_per_epoch == 0) throw ConfigError("episodes_per_epoch must be positive");
}

std::uint64_t RunConfig::resolved_eval_seed() const noexcept {
  return eval_seed != 0 ? eval_seed : derive_seed(seed, "eval");
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto it = fields().find(trim(key));
  if (it == fields().end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second.set(cfg, it->first, trim(value));
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  set_config_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig default_run_config() {
  RunConfig cfg;
  if (const char* root = std::getenv(kDataRootEnv); root && *root) cfg.data_dir = root;
  return cfg;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(base, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + "=" + field.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, _] : fields()) keys.push_back(key);
  return keys;
}

}  // namespace espn
