#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "motion/cli.hpp"
#include "motion/data.hpp"
#include "motion/grad/checkpoint.hpp"
#include "motion/skeleton.hpp"

namespace {

/// Loads the config file, then layers --set overrides and --seed on top.
motion::ExperimentConfig resolve_config(const std::string& path,
                                        const std::vector<std::string>& overrides,
                                        const std::string& seed) {
  motion::ExperimentConfig cfg = motion::ExperimentConfig::load(path);
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: override '" + item +
                                  "' is not of the form key=value");
    }
    cfg.set(item.substr(0, eq), item.substr(eq + 1));
  }
  if (!seed.empty()) cfg.set("seed", seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"human motion prediction toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_path, checkpoint, seed_file, seed_override;
  std::vector<std::string> overrides, eval_dirs;
  std::size_t horizon = 0;
  bool baseline = false;

  const auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--set", overrides, "override a config key (key=value)");
    cmd->add_option("--seed", seed_override, "override the config seed");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_config(synth);
  synth->add_option("--out", out_path, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train a model");
  add_config(train);
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out_path, "output directory")->required();

  CLI::App* predict = app.add_subcommand("predict", "roll a checkpoint forward");
  predict->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  predict->add_option("--input", seed_file, "seed clip (MOTN)")->required();
  predict->add_option("--horizon", horizon, "frames to predict")->required();
  predict->add_option("--out", out_path, "output clip path")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate on the test split");
  add_config(eval);
  eval->add_option("--checkpoint", checkpoint, "trained checkpoint");
  eval->add_flag("--baseline", baseline, "evaluate the zero-velocity baseline");
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--out", out_path, "output directory")->required();

  CLI::App* report = app.add_subcommand("report", "merge evaluations into one table");
  report->add_option("--out", out_path, "merged table path")->required();
  report->add_option("dirs", eval_dirs, "evaluation directories")->required();

  CLI::App* version = app.add_subcommand("version", "print the tool version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) {
      motion::cmd_synth(resolve_config(config_path, overrides, seed_override), out_path);
    } else if (*train) {
      motion::cmd_train(resolve_config(config_path, overrides, seed_override), data_dir,
                        out_path);
    } else if (*predict) {
      motion::cmd_predict(checkpoint, seed_file, horizon, out_path);
    } else if (*eval) {
      if (baseline == !checkpoint.empty()) {
        std::fprintf(stderr, "error: usage: pass exactly one of --checkpoint, --baseline\n");
        return 1;
      }
      const std::string source = baseline ? motion::kZeroVelocitySource : checkpoint;
      motion::cmd_eval(resolve_config(config_path, overrides, seed_override), source,
                       data_dir, out_path);
    } else if (*report) {
      motion::cmd_report(eval_dirs, out_path);
    } else if (*version) {
      std::printf("%s\n", motion::kToolVersion);
    }
  } catch (const motion::MotnError& e) {
    std::fprintf(stderr, "error: motn: %s\n", e.what());
    return 2;
  } catch (const motion::grad::CheckpointError& e) {
    std::fprintf(stderr, "error: checkpoint: %s\n", e.what());
    return 2;
  } catch (const motion::SkeletonError& e) {
    std::fprintf(stderr, "error: skeleton: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: config: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: runtime: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 2;
  }
  return 0;
}
