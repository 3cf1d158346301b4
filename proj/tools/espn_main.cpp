// espn: command-line front end for training, evaluation, data preparation
// and the analytic tools.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "espn/checkpoint.hpp"
#include "espn/config.hpp"
#include "espn/costmodel.hpp"
#include "espn/dist.hpp"
#include "espn/episodes.hpp"
#include "espn/error.hpp"
#include "espn/gradcheck.hpp"
#include "espn/nncore.hpp"
#include "espn/synthetic.hpp"
#include "espn/trainer.hpp"

namespace fs = std::filesystem;

namespace {

espn::RunConfig build_config(const std::string& config_file,
                             const std::vector<std::string>& overrides) {
  espn::RunConfig cfg =
      config_file.empty() ? espn::default_run_config() : espn::load_config(config_file);
  for (const auto& o : overrides) espn::apply_override(cfg, o);
  return cfg;
}

espn::Dataset open_data(const espn::RunConfig& cfg) {
  if (cfg.data_dir.empty()) {
    throw espn::ConfigError(std::string("no data_dir configured (set data_dir or $") +
                            espn::kDataRootEnv + ")");
  }
  return espn::load_dataset(cfg.data_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolution-strategies training of prototypical networks"};
  app.require_subcommand(1);

  // prepare-data
  std::string raw_dir, out_dir;
  std::uint64_t data_seed = 0;
  std::size_t expected_chars = espn::kOmniglotCharacters;
  auto* prep = app.add_subcommand("prepare-data", "Ingest raw Omniglot into the class cache");
  prep->add_option("--raw", raw_dir, "Raw image tree (alphabet/character/*.png)")->required();
  prep->add_option("--out", out_dir, "Cache output directory")->required();
  prep->add_option("--seed", data_seed, "Split seed");
  prep->add_option("--expected-characters", expected_chars,
                   "Character count check (split sizes scale when not 1623)");

  // synth-data
  std::string synth_out;
  std::size_t synth_chars = espn::kOmniglotCharacters;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand(
      "synth-data", "Write a procedural glyph set in the raw Omniglot layout");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--characters", synth_chars, "Number of characters");
  synth->add_option("--seed", synth_seed, "Generator seed");

  // train
  std::string config_file;
  std::vector<std::string> overrides;
  bool resume = false, csv = false;
  std::size_t max_epochs = 0;
  auto* train = app.add_subcommand("train", "Train a model with ES");
  train->add_option("--config", config_file, "key=value config file");
  train->add_option("--override", overrides, "key=value override (repeatable)");
  train->add_flag("--resume", resume, "Continue from output_dir/state.json");
  train->add_flag("--csv", csv, "Also write metrics.csv");
  train->add_option("--max-epochs", max_epochs, "Stop after this many epochs in total");

  // eval
  std::string checkpoint, split = "test";
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on val/test episodes");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--split", split, "val|test");
  eval->add_option("--config", config_file, "key=value config file");
  eval->add_option("--override", overrides, "key=value override (repeatable)");

  // sweep
  std::string grid_file;
  auto* sweep = app.add_subcommand("sweep", "Run a hyper-parameter grid");
  sweep->add_option("--grid", grid_file, "Grid file: key=v1,v2,... per line")->required();
  sweep->add_option("--config", config_file, "Base config");
  sweep->add_option("--override", overrides, "key=value override (repeatable)");

  // grad-check
  std::uint64_t check_seed = 7;
  auto* gcheck = app.add_subcommand("grad-check", "Estimator-vs-analytic oracle suites");
  gcheck->add_option("--seed", check_seed, "Seed for the synthetic objectives");

  // cost-model
  std::uint64_t cm_channels = 64, cm_way = 10, cm_pop = 64, cm_steps = 1, cm_g = 0;
  std::uint64_t cm_shot = 5, cm_query = 15;
  bool cm_json = false, cm_maml = false;
  auto* cost = app.add_subcommand("cost-model", "Memory comparison of BP, forward-mode and ES");
  cost->add_option("--channels", cm_channels, "Embedding channels");
  cost->add_option("--way", cm_way, "Classes per task (N)");
  cost->add_option("--pop", cm_pop, "Population size (P)");
  cost->add_option("--steps", cm_steps, "Task length in inner-loop steps (l)");
  cost->add_option("--g", cm_g, "Per-step intermediate bytes; default measured from the network");
  cost->add_option("--shot", cm_shot, "Support per class, for the measured g");
  cost->add_option("--query", cm_query, "Queries per class, for the measured g");
  cost->add_flag("--json", cm_json, "Print JSON instead of text");
  cost->add_flag("--maml", cm_maml, "Also report the MAML case (D_psi = D_phi)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prep) {
      espn::PrepareOptions opts;
      opts.expected_characters = expected_chars;
      if (expected_chars != espn::kOmniglotCharacters) {
        const std::size_t total = expected_chars * espn::kRotations;
        opts.split_sizes.train = total * 4804 / 6492;
        opts.split_sizes.validation = total * 1012 / 6492;
        opts.split_sizes.test = total - opts.split_sizes.train - opts.split_sizes.validation;
      }
      const espn::Dataset ds = espn::prepare_dataset(raw_dir, out_dir, data_seed, opts);
      std::printf("train %zu  val %zu  test %zu classes -> %s\n", ds.train.size(),
                  ds.validation.size(), ds.test.size(), out_dir.c_str());
      return 0;
    }
    if (*synth) {
      espn::synthetic::write_raw_tree(synth_out, synth_chars, synth_seed);
      std::printf("wrote %zu characters x %zu images to %s\n", synth_chars,
                  espn::kImagesPerClass, synth_out.c_str());
      return 0;
    }
    if (*train) {
      const espn::RunConfig cfg = build_config(config_file, overrides);
      const espn::Dataset data = open_data(cfg);
      espn::TrainOptions opts;
      opts.resume = resume;
      opts.write_csv = csv;
      opts.quiet = false;
      if (max_epochs > 0) opts.stop_after_epoch = max_epochs;
      const espn::TrainResult r = espn::train(cfg, data, opts);
      std::printf("steps %llu  evaluations %llu  epochs %zu\n",
                  static_cast<unsigned long long>(r.total_steps),
                  static_cast<unsigned long long>(r.evaluations), r.epochs_completed);
      if (r.test) {
        std::printf("test accuracy %.4f +- %.4f over %zu episodes\n", r.test->mean_accuracy,
                    r.test->std_accuracy, r.test->accuracies.size());
      }
      return 0;
    }
    if (*eval) {
      const espn::RunConfig cfg = build_config(config_file, overrides);
      const espn::Dataset data = open_data(cfg);
      const auto res =
          espn::evaluate_checkpoint(checkpoint, cfg, data, espn::parse_split(split));
      std::printf("%s accuracy %.4f +- %.4f over %zu episodes (loss %.4f)\n", split.c_str(),
                  res.mean_accuracy, res.std_accuracy, res.accuracies.size(), res.mean_loss);
      return 0;
    }
    if (*sweep) {
      const espn::RunConfig cfg = build_config(config_file, overrides);
      std::ifstream is(grid_file);
      if (!is) throw espn::ConfigError("cannot read grid " + grid_file);
      std::stringstream ss;
      ss << is.rdbuf();
      const auto grid = espn::parse_grid(ss.str());
      const espn::Dataset data = open_data(cfg);
      const auto rows = espn::sweep(cfg, grid, data);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        std::string label;
        for (const auto& [k, v] : rows[i].overrides) label += k + "=" + v + " ";
        if (rows[i].ok) {
          std::printf("%3zu  %-40s %.4f +- %.4f\n", i, label.c_str(), rows[i].mean_accuracy,
                      rows[i].std_accuracy);
        } else {
          std::printf("%3zu  %-40s FAILED: %s\n", i, label.c_str(), rows[i].error.c_str());
        }
      }
      return 0;
    }
    if (*gcheck) {
      bool all = true;
      for (const auto& r : espn::gradcheck::run_all(check_seed)) {
        std::printf("%-4s %-24s measured %-12.6g threshold %-10.3g %s\n", r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.measured, r.threshold, r.detail.c_str());
        all = all && r.passed;
      }
      return all ? 0 : 1;
    }
    if (*cost) {
      espn::EmbeddingNet net;
      net.channels = cm_channels;
      net.validate();
      espn::CostInputs inp;
      inp.g = cm_g != 0 ? cm_g : espn::activation_bytes(net, cm_way * (cm_shot + cm_query));
      inp.l = cm_steps;
      inp.d_phi = net.param_count();
      inp.d_psi = espn::protonet_state_size(cm_channels, cm_way);
      inp.p = cm_pop;
      const auto rep = espn::compute_costs(inp);
      const auto as_json = [](const espn::CostInputs& i, const espn::CostReport& r) {
        return nlohmann::json{{"g", i.g},
                              {"l", i.l},
                              {"d_phi", i.d_phi},
                              {"d_psi", i.d_psi},
                              {"p", i.p},
                              {"bytes_per_scalar", i.bytes_per_scalar},
                              {"omega_bp", r.omega_bp},
                              {"omega_fm", r.omega_fm},
                              {"omega_es", r.omega_es},
                              {"l1", r.l1},
                              {"l2", r.l2},
                              {"fm_to_es_ratio", r.fm_to_es_ratio()}};
      };
      if (cm_json) {
        nlohmann::json j = {{"protonet", as_json(inp, rep)}};
        if (cm_maml) {
          const auto m = espn::maml_preset(inp);
          j["maml"] = as_json(m, espn::compute_costs(m));
        }
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << "ProtoNet (" << cm_channels << " channels, " << cm_way << "-way)\n"
                  << espn::format_report(inp, rep);
        if (cm_maml) {
          const auto m = espn::maml_preset(inp);
          std::cout << "\nMAML (D_psi = D_phi)\n" << espn::format_report(m, espn::compute_costs(m));
        }
      }
      return 0;
    }
  } catch (const espn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
