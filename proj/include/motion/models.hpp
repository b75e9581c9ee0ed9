#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "motion/data.hpp"
#include "motion/grad/layers.hpp"
#include "motion/grad/optimizer.hpp"
#include "motion/spl.hpp"

namespace motion {

/// rnn runs one pass with teacher forcing over every frame; seq2seq splits
/// into an encoder over the seed and a decoder over the target span.
enum class ModelKind { Rnn, Seq2seq };

ModelKind model_kind_from_name(const std::string& name);
const char* model_kind_name(ModelKind kind);

/// Structured per-joint head or a plain two-layer dense head.
enum class HeadKind { Spl, Dense };

HeadKind head_kind_from_name(const std::string& name);
const char* head_kind_name(HeadKind kind);

/// What the seq2seq decoder consumes while training: ground-truth frames,
/// its own predictions, or ground truth with input dropout.
enum class DecoderFeeding { Groundtruth, Sampling, Dropout };

DecoderFeeding decoder_feeding_from_name(const std::string& name);
const char* decoder_feeding_name(DecoderFeeding feeding);

struct ModelConfig {
  ModelKind kind = ModelKind::Rnn;
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

  void validate() const;
  /// Flat "model.*" entries for checkpoint metadata; from_meta inverts.
  std::map<std::string, std::string> to_meta() const;
  static ModelConfig from_meta(const std::map<std::string, std::string>& meta);
};

struct PredictionTask {
  std::size_t seed_frames = 120;
  std::size_t target_frames = 24;
  double fps = 60.0;

  void validate() const;
};

/// P copies of the last seed frame.
PoseSequence zero_velocity_predict(const PoseSequence& seed, std::size_t horizon);

/// The shared pipeline of every model here: normalized pose -> input dropout
/// -> linear projection -> recurrent cell -> head delta. How steps chain and
/// which predictions incur loss depends on the kind.
class SequenceModel {
 public:
  SequenceModel(const SkeletonSpec& skel, Representation repr, const ModelConfig& config,
                grad::ParameterStore& store);

  grad::CellState initial_state(grad::Tape& tape, std::size_t batch) const;
  /// Cell update only; used for seed warm-up and the seq2seq encoder.
  grad::CellState advance(grad::Tape& tape, grad::ParameterStore& store, grad::Var input,
                          const grad::CellState& state) const;
  /// Full step: the head's delta for the next frame plus the new state. The
  /// caller combines the delta with the input (residual) or uses it directly.
  std::pair<grad::Var, grad::CellState> step(grad::Tape& tape, grad::ParameterStore& store,
                                             grad::Var input,
                                             const grad::CellState& state) const;
  /// Normalized-space prediction for one step's delta.
  grad::Var combine(grad::Tape& tape, grad::Var input, grad::Var delta) const;

  /// The normalized-space predictions that incur loss, in frame order.
  /// `frames` holds S+P normalized batch tensors. rnn: teacher forcing over
  /// every transition, S+P-1 predictions for frames 2..S+P; seq2seq: encoder
  /// on frames 1..S-1 and P decoder predictions, inputs per decoder_feeding.
  std::vector<grad::Var> training_predictions(grad::Tape& tape,
                                              grad::ParameterStore& store,
                                              std::span<const grad::Tensor> frames,
                                              std::size_t seed_frames) const;
  /// Pose error of training_predictions against their target frames, summed
  /// over steps and joints and averaged over the batch.
  grad::Var training_loss(grad::Tape& tape, grad::ParameterStore& store,
                          std::span<const grad::Tensor> frames,
                          std::size_t seed_frames) const;

  std::size_t input_size() const { return input_size_; }
  Representation representation() const { return repr_; }
  const ModelConfig& config() const { return config_; }

 private:
  grad::Var head_delta(grad::Tape& tape, grad::ParameterStore& store, grad::Var h) const;
  grad::Var net_input(grad::Tape& tape, grad::Var input) const;

  ModelConfig config_;
  Representation repr_;
  std::size_t input_size_;
  double active_dropout_;
  grad::Linear projection_;
  grad::RecurrentCell cell_;
  std::optional<SplLayer> spl_;
  std::optional<grad::Linear> dense1_, dense2_;
};

/// Autoregressive rollout: the state is warmed on every seed frame, then P
/// steps feed back the model's own output. Residual deltas are applied in
/// raw space (x + sigma . delta), so a zero head reproduces the input
/// bit-for-bit.
PoseSequence predict(const SequenceModel& model, grad::ParameterStore& store,
                     const PoseSequence& seed, std::size_t horizon,
                     const NormStats& stats);

struct TrainConfig {
  std::size_t batch_size = 16;
  grad::LrSchedule schedule{1e-3, 0.96, 1000};
  std::size_t max_steps = 1000;
  std::size_t patience = 5;
  std::size_t valid_interval = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainLogEntry {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  bool validated = false;
  double valid_metric = 0.0;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  double best_metric = std::numeric_limits<double>::infinity();
  bool early_stopped = false;
};

/// One window = seed_frames + target_frames raw frames.
using Window = std::vector<std::vector<double>>;

/// Adam over shuffled batches with per-epoch reshuffling; every
/// valid_interval steps the until-horizon joint-angle metric on the
/// validation windows decides early stopping, and the best parameters are
/// restored at the end. Aborts on a non-finite loss. With no validation
/// windows the final parameters stand.
TrainResult train_model(SequenceModel& model, grad::ParameterStore& store,
                        std::span<const Window> train_windows,
                        std::span<const Window> valid_windows, const SkeletonSpec& skel,
                        const PredictionTask& task, const NormStats& stats,
                        const TrainConfig& config);

/// Windows cut from whole sequences with the given stride.
std::vector<Window> cut_windows(std::span<const PoseSequence> sequences,
                                const WindowSpec& spec);

}  // namespace motion
