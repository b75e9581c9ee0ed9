#pragma once

#include <string>
#include <vector>

#include "motion/config.hpp"

namespace motion {

/// Reported by `version`, stamped into checkpoints and output directories.
extern const char* const kToolVersion;

/// Name for the frozen last-frame baseline where a checkpoint path is
/// otherwise expected.
extern const char* const kZeroVelocitySource;

/// Generates the synthetic dataset described by the config into out_dir:
/// one MOTN file per sequence, a manifest, and the resolved config.
void cmd_synth(const ExperimentConfig& config, const std::string& out_dir);

/// Trains on the train split of data_dir and writes model.ckpt,
/// train_log.csv and the resolved config into out_dir. The checkpoint
/// carries everything prediction needs: model configuration, skeleton,
/// normalization statistics and the task shape.
void cmd_train(const ExperimentConfig& config, const std::string& data_dir,
               const std::string& out_dir);

/// Rolls a checkpoint forward `horizon` frames from the seed clip and writes
/// the prediction as MOTN.
void cmd_predict(const std::string& checkpoint, const std::string& seed_file,
                 std::size_t horizon, const std::string& out_file);

/// Evaluates `source` (a checkpoint path, or "zero_velocity" for the
/// baseline) on the test split of data_dir: writes report.csv, pck.svg and
/// the resolved config into out_dir.
void cmd_eval(const ExperimentConfig& config, const std::string& source,
              const std::string& data_dir, const std::string& out_dir);

/// Merges evaluation directories into one comparison table, one row per
/// model, one column per metric and horizon. Refuses inputs whose skeleton
/// hash, coverage grid, mode or horizons disagree.
void cmd_report(const std::vector<std::string>& eval_dirs, const std::string& out_file);

}  // namespace motion
