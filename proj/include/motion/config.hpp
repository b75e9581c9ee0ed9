#pragma once

#include <string>
#include <vector>

#include "motion/data.hpp"
#include "motion/models.hpp"

namespace motion {

/// What produces the predictions: a trainable family or the frozen baseline.
enum class Family { Rnn, Seq2seq, ZeroVelocity };

const char* family_name(Family family);
Family family_from_name(const std::string& name);

/// One experiment, flat key = value text. Unknown and duplicate keys are
/// rejected; parse(serialize()) reproduces every field bit-exactly, so the
/// resolved copy written next to each run's outputs can seed an identical
/// re-run.
struct ExperimentConfig {
  // Data.
  std::string skeleton;  // path to the skeleton file
  Representation representation = Representation::AngleAxis;
  double fps = 60.0;
  std::size_t synth_sequences = 60;
  std::size_t synth_frames = 600;
  std::size_t synth_harmonics = 2;
  double synth_amp_min = 0.1, synth_amp_max = 0.6;
  double synth_freq_min = 0.3, synth_freq_max = 1.2;
  double synth_noise_std = 0.0;
  double split_train = 0.8, split_valid = 0.1, split_test = 0.1;

  // Model.
  Family family = Family::Rnn;
  grad::CellType cell = grad::CellType::Lstm;
  std::size_t units = 1024;
  std::size_t projection = 256;
  double input_dropout = 0.1;
  HeadKind head = HeadKind::Spl;
  Hierarchy hierarchy = Hierarchy::Kinematic;
  Feeding feeding = Feeding::Sparse;
  std::size_t spl_hidden = 64;
  std::uint64_t spl_random_seed = 0;
  std::size_t dense_hidden = 960;
  bool residual = true;
  DecoderFeeding decoder_feeding = DecoderFeeding::Groundtruth;

  // Training.
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double decay_rate = 0.96;
  std::size_t decay_steps = 1000;
  std::size_t max_steps = 1000;
  std::size_t patience = 5;
  std::size_t valid_interval = 50;

  // Windows and evaluation.
  std::size_t seed_frames = 120;
  std::size_t target_frames = 24;
  std::size_t stride = 24;
  std::vector<double> horizons_ms{100.0, 200.0, 300.0, 400.0};
  std::vector<double> pck_grid;  // empty means the default grid

  std::uint64_t seed = 1;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  /// Assigns one key from its text form; throws on unknown keys or bad
  /// values.
  void set(const std::string& key, const std::string& value);

  std::string serialize() const;
  void save(const std::string& path) const;

  void validate() const;

  // Views into the module-level configurations.
  SynthConfig synth_config(std::size_t joints) const;
  ModelConfig model_config() const;  // family must not be ZeroVelocity
  TrainConfig train_config() const;
  WindowSpec window_spec() const;
  PredictionTask task() const;
  std::vector<double> grid() const;  // pck_grid or the default
};

}  // namespace motion
