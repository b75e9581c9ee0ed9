#include "motion/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "motion/metrics.hpp"
#include "motion/util.hpp"

namespace motion {

using grad::CellState;
using grad::Tape;
using grad::Tensor;
using grad::Var;

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "rnn") return ModelKind::Rnn;
  if (name == "seq2seq") return ModelKind::Seq2seq;
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

const char* model_kind_name(ModelKind kind) {
  return kind == ModelKind::Rnn ? "rnn" : "seq2seq";
}

HeadKind head_kind_from_name(const std::string& name) {
  if (name == "spl") return HeadKind::Spl;
  if (name == "dense") return HeadKind::Dense;
  throw std::invalid_argument("unknown head kind '" + name + "'");
}

const char* head_kind_name(HeadKind kind) {
  return kind == HeadKind::Spl ? "spl" : "dense";
}

DecoderFeeding decoder_feeding_from_name(const std::string& name) {
  if (name == "groundtruth") return DecoderFeeding::Groundtruth;
  if (name == "sampling") return DecoderFeeding::Sampling;
  if (name == "dropout") return DecoderFeeding::Dropout;
  throw std::invalid_argument("unknown decoder feeding '" + name + "'");
}

const char* decoder_feeding_name(DecoderFeeding feeding) {
  switch (feeding) {
    case DecoderFeeding::Groundtruth: return "groundtruth";
    case DecoderFeeding::Sampling: return "sampling";
    case DecoderFeeding::Dropout: return "dropout";
  }
  throw std::invalid_argument("unknown decoder feeding value");
}

void ModelConfig::validate() const {
  if (units == 0 || projection == 0) {
    throw std::invalid_argument("model: units and projection must be positive");
  }
  if (input_dropout < 0.0 || input_dropout >= 1.0) {
    throw std::invalid_argument("model: input dropout must lie in [0, 1)");
  }
  if (head == HeadKind::Spl && spl_hidden == 0) {
    throw std::invalid_argument("model: spl hidden width must be positive");
  }
  if (head == HeadKind::Dense && dense_hidden == 0) {
    throw std::invalid_argument("model: dense hidden width must be positive");
  }
}

std::map<std::string, std::string> ModelConfig::to_meta() const {
  std::map<std::string, std::string> meta;
  meta["model.kind"] = model_kind_name(kind);
  meta["model.cell"] = grad::cell_name(cell);
  meta["model.units"] = std::to_string(units);
  meta["model.projection"] = std::to_string(projection);
  meta["model.input_dropout"] = std::to_string(input_dropout);
  meta["model.head"] = head_kind_name(head);
  meta["model.hierarchy"] = hierarchy_name(hierarchy);
  meta["model.feeding"] = feeding_name(feeding);
  meta["model.spl_hidden"] = std::to_string(spl_hidden);
  meta["model.spl_random_seed"] = std::to_string(spl_random_seed);
  meta["model.dense_hidden"] = std::to_string(dense_hidden);
  meta["model.residual"] = residual ? "1" : "0";
  meta["model.decoder_feeding"] = decoder_feeding_name(decoder_feeding);
  return meta;
}

ModelConfig ModelConfig::from_meta(const std::map<std::string, std::string>& meta) {
  const auto need = [&](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) {
      throw std::invalid_argument(std::string("checkpoint metadata misses '") + key + "'");
    }
    return it->second;
  };
  ModelConfig config;
  config.kind = model_kind_from_name(need("model.kind"));
  config.cell = grad::cell_from_name(need("model.cell"));
  config.units = std::stoull(need("model.units"));
  config.projection = std::stoull(need("model.projection"));
  config.input_dropout = std::stod(need("model.input_dropout"));
  config.head = head_kind_from_name(need("model.head"));
  config.hierarchy = hierarchy_from_name(need("model.hierarchy"));
  config.feeding = feeding_from_name(need("model.feeding"));
  config.spl_hidden = std::stoull(need("model.spl_hidden"));
  config.spl_random_seed = std::stoull(need("model.spl_random_seed"));
  config.dense_hidden = std::stoull(need("model.dense_hidden"));
  config.residual = need("model.residual") == "1";
  config.decoder_feeding = decoder_feeding_from_name(need("model.decoder_feeding"));
  config.validate();
  return config;
}

void PredictionTask::validate() const {
  if (seed_frames == 0 || target_frames == 0) {
    throw std::invalid_argument("task: seed and target frames must be positive");
  }
  if (!(fps > 0.0)) throw std::invalid_argument("task: fps must be positive");
}

PoseSequence zero_velocity_predict(const PoseSequence& seed, std::size_t horizon) {
  if (seed.frames.empty()) {
    throw std::invalid_argument("zero velocity: seed has no frames");
  }
  if (horizon == 0) {
    throw std::invalid_argument("zero velocity: horizon must be positive");
  }
  PoseSequence out;
  out.repr = seed.repr;
  out.joints = seed.joints;
  out.fps = seed.fps;
  out.frames.assign(horizon, seed.frames.back());
  return out;
}

SequenceModel::SequenceModel(const SkeletonSpec& skel, Representation repr,
                             const ModelConfig& config, grad::ParameterStore& store)
    : config_(config),
      repr_(repr),
      input_size_(skel.joints() * rep_size(repr)),
      // Plain seq2seq variants run dry inputs; only rnn and the dropout
      // feeding mode keep the configured rate.
      active_dropout_(config.kind == ModelKind::Seq2seq &&
                              config.decoder_feeding != DecoderFeeding::Dropout
                          ? 0.0
                          : config.input_dropout),
      projection_(input_size_, config.projection, "proj"),
      cell_(config.cell, config.projection, config.units, "cell") {
  config_.validate();
  skel.validate();
  projection_.register_params(store);
  cell_.register_params(store);
  if (config_.head == HeadKind::Spl) {
    SplConfig spl;
    spl.hierarchy = config_.hierarchy;
    spl.feeding = config_.feeding;
    spl.hidden = config_.spl_hidden;
    spl.joint_size = rep_size(repr);
    spl.context_dim = config_.units;
    spl.random_seed = config_.spl_random_seed;
    spl_.emplace(skel, spl, store, "spl");
  } else {
    dense1_.emplace(config_.units, config_.dense_hidden, "head.l1");
    dense2_.emplace(config_.dense_hidden, input_size_, "head.l2");
    dense1_->register_params(store);
    dense2_->register_params(store);
  }
}

CellState SequenceModel::initial_state(Tape& tape, std::size_t batch) const {
  return cell_.initial_state(tape, batch);
}

Var SequenceModel::net_input(Tape& tape, Var input) const {
  return tape.dropout(input, active_dropout_);
}

CellState SequenceModel::advance(Tape& tape, grad::ParameterStore& store, Var input,
                                 const CellState& state) const {
  return cell_.step(tape, store, projection_.forward(tape, store, net_input(tape, input)),
                    state);
}

Var SequenceModel::head_delta(Tape& tape, grad::ParameterStore& store, Var h) const {
  if (spl_) return spl_->forward(tape, store, h);
  return dense2_->forward(tape, store, tape.relu(dense1_->forward(tape, store, h)));
}

std::pair<Var, CellState> SequenceModel::step(Tape& tape, grad::ParameterStore& store,
                                              Var input, const CellState& state) const {
  const CellState next = advance(tape, store, input, state);
  return {head_delta(tape, store, next.h), next};
}

Var SequenceModel::combine(Tape& tape, Var input, Var delta) const {
  return config_.residual ? tape.add(input, delta) : delta;
}

std::vector<Var> SequenceModel::training_predictions(Tape& tape,
                                                     grad::ParameterStore& store,
                                                     std::span<const Tensor> frames,
                                                     std::size_t seed_frames) const {
  if (frames.size() < 2 || seed_frames == 0 || seed_frames >= frames.size()) {
    throw std::invalid_argument("training loss: need seed plus at least one target frame");
  }
  const std::size_t batch = frames.front().dim(0);
  for (const Tensor& f : frames) {
    if (f.rank() != 2 || f.dim(0) != batch || f.dim(1) != input_size_) {
      throw std::invalid_argument("training loss: frame tensor shape mismatch");
    }
  }

  CellState state = initial_state(tape, batch);
  std::vector<Var> preds;
  if (config_.kind == ModelKind::Rnn) {
    // Teacher forcing over every transition, a prediction for every frame.
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
      const Var input = tape.leaf(frames[t]);
      auto [delta, next] = step(tape, store, input, state);
      state = next;
      preds.push_back(combine(tape, input, delta));
    }
  } else {
    for (std::size_t t = 0; t + 1 < seed_frames; ++t) {
      state = advance(tape, store, tape.leaf(frames[t]), state);
    }
    // Decoder: feeding picks between fresh ground truth and the model's own
    // previous prediction.
    Var prev;
    for (std::size_t i = 0; i < frames.size() - seed_frames; ++i) {
      Var input;
      if (config_.decoder_feeding == DecoderFeeding::Sampling && prev.valid()) {
        input = prev;
      } else {
        input = tape.leaf(frames[seed_frames - 1 + i]);
      }
      auto [delta, next] = step(tape, store, input, state);
      state = next;
      prev = combine(tape, input, delta);
      preds.push_back(prev);
    }
  }
  return preds;
}

Var SequenceModel::training_loss(Tape& tape, grad::ParameterStore& store,
                                 std::span<const Tensor> frames,
                                 std::size_t seed_frames) const {
  const std::vector<Var> preds =
      training_predictions(tape, store, frames, seed_frames);
  const std::size_t first_target = frames.size() - preds.size();
  Var total;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Var err =
        tape.sum(tape.square(tape.sub(preds[i], tape.leaf(frames[first_target + i]))));
    total = total.valid() ? tape.add(total, err) : err;
  }
  const std::size_t batch = frames.front().dim(0);
  return tape.scale(total, 1.0 / static_cast<double>(batch));
}

PoseSequence predict(const SequenceModel& model, grad::ParameterStore& store,
                     const PoseSequence& seed, std::size_t horizon,
                     const NormStats& stats) {
  seed.validate();
  if (seed.repr != model.representation()) {
    throw std::invalid_argument("predict: sequence representation differs from training");
  }
  if (seed.frame_size() != model.input_size()) {
    throw std::invalid_argument("predict: frame width differs from training");
  }
  if (stats.dim() != model.input_size()) {
    throw std::invalid_argument("predict: normalization stats width mismatch");
  }
  if (seed.frames.empty()) throw std::invalid_argument("predict: seed has no frames");
  if (horizon == 0) throw std::invalid_argument("predict: horizon must be positive");

  Tape tape(false);
  const auto as_leaf = [&](const std::vector<double>& raw) {
    Tensor t({1, raw.size()});
    const auto z = stats.apply(raw);
    for (std::size_t i = 0; i < z.size(); ++i) t[i] = z[i];
    return tape.leaf(std::move(t));
  };

  CellState state = model.initial_state(tape, 1);
  for (std::size_t t = 0; t + 1 < seed.frames.size(); ++t) {
    state = model.advance(tape, store, as_leaf(seed.frames[t]), state);
  }

  PoseSequence out;
  out.repr = seed.repr;
  out.joints = seed.joints;
  out.fps = seed.fps;
  std::vector<double> current = seed.frames.back();
  for (std::size_t i = 0; i < horizon; ++i) {
    auto [delta, next] = model.step(tape, store, as_leaf(current), state);
    state = next;
    const Tensor& d = tape.value(delta);
    std::vector<double> frame(model.input_size());
    if (model.config().residual) {
      // Raw-space emission: sigma . 0 = 0 keeps a silent head bit-exact.
      for (std::size_t j = 0; j < frame.size(); ++j) {
        frame[j] = current[j] + stats.stddev[j] * d[j];
      }
    } else {
      std::vector<double> z(d.numel());
      for (std::size_t j = 0; j < z.size(); ++j) z[j] = d[j];
      frame = stats.invert(z);
    }
    out.frames.push_back(frame);
    current = std::move(frame);
  }
  return out;
}

void TrainConfig::validate() const {
  if (batch_size == 0 || max_steps == 0 || patience == 0 || valid_interval == 0) {
    throw std::invalid_argument(
        "train: batch size, max steps, patience and validation interval must be positive");
  }
  schedule.validate();
}

std::vector<Window> cut_windows(std::span<const PoseSequence> sequences,
                                const WindowSpec& spec) {
  std::vector<Window> out;
  for (const auto& seq : sequences) {
    seq.validate();
    for (const std::size_t start : extract_windows(seq.frames.size(), spec)) {
      Window w(seq.frames.begin() + static_cast<std::ptrdiff_t>(start),
               seq.frames.begin() + static_cast<std::ptrdiff_t>(start + spec.length()));
      out.push_back(std::move(w));
    }
  }
  return out;
}

namespace {

/// Joint-angle metric at the full horizon of the validation windows.
double validation_metric(const SequenceModel& model, grad::ParameterStore& store,
                         std::span<const Window> valid_windows, const SkeletonSpec& skel,
                         const PredictionTask& task, const NormStats& stats) {
  std::vector<EvalPair> pairs;
  pairs.reserve(valid_windows.size());
  for (const Window& w : valid_windows) {
    PoseSequence seed;
    seed.repr = model.representation();
    seed.joints = skel.joints();
    seed.fps = task.fps;
    seed.frames.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(task.seed_frames));
    PoseSequence target = seed;
    target.frames.assign(w.begin() + static_cast<std::ptrdiff_t>(task.seed_frames), w.end());
    EvalPair pair;
    pair.pred = predict(model, store, seed, task.target_frames, stats);
    pair.target = std::move(target);
    pair.horizon = task.target_frames;
    pairs.push_back(std::move(pair));
  }
  return joint_angle_metric(pairs, skel, task.target_frames, Accumulate::Until);
}

}  // namespace

TrainResult train_model(SequenceModel& model, grad::ParameterStore& store,
                        std::span<const Window> train_windows,
                        std::span<const Window> valid_windows, const SkeletonSpec& skel,
                        const PredictionTask& task, const NormStats& stats,
                        const TrainConfig& config) {
  config.validate();
  task.validate();
  if (train_windows.empty()) {
    throw std::invalid_argument("train: no training windows");
  }
  const std::size_t window_len = task.seed_frames + task.target_frames;
  for (const Window& w : train_windows) {
    if (w.size() != window_len) {
      throw std::invalid_argument("train: window length does not match the task");
    }
  }

  const std::uint64_t dropout_stream = derive_seed(config.seed, 1);
  const std::uint64_t shuffle_stream = derive_seed(config.seed, 2);

  TrainResult result;
  std::vector<Tensor> best_values;
  std::size_t rounds_without_improvement = 0;
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), 0);

  bool done = false;
  for (std::size_t epoch = 0; !done; ++epoch) {
    Rng epoch_rng(derive_seed(shuffle_stream, epoch));
    epoch_rng.shuffle(std::span<std::size_t>(order));

    for (std::size_t begin = 0; begin < order.size() && !done;
         begin += config.batch_size) {
      const std::size_t batch =
          std::min(config.batch_size, order.size() - begin);
      // Assemble [batch x N] normalized tensors per time step.
      std::vector<Tensor> frames(window_len, Tensor({batch, model.input_size()}));
      for (std::size_t b = 0; b < batch; ++b) {
        const Window& w = train_windows[order[begin + b]];
        for (std::size_t t = 0; t < window_len; ++t) {
          const auto z = stats.apply(w[t]);
          for (std::size_t j = 0; j < z.size(); ++j) frames[t].at(b, j) = z[j];
        }
      }

      const std::size_t step = result.steps + 1;
      Tape tape(true, derive_seed(dropout_stream, step));
      const Var loss = model.training_loss(tape, store, frames, task.seed_frames);
      const double loss_value = tape.value(loss)[0];
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error("training aborted at step " + std::to_string(step) +
                                 ": non-finite loss");
      }
      const auto grads = tape.backward(loss, store);
      const double lr = config.schedule.at(store.step());
      grad::adam_step(store, grads, config.schedule);
      result.steps = step;

      TrainLogEntry entry;
      entry.step = step;
      entry.loss = loss_value;
      entry.lr = lr;

      if (!valid_windows.empty() && step % config.valid_interval == 0) {
        const double metric =
            validation_metric(model, store, valid_windows, skel, task, stats);
        entry.validated = true;
        entry.valid_metric = metric;
        if (metric < result.best_metric) {
          result.best_metric = metric;
          result.best_step = step;
          best_values = store.snapshot_values();
          rounds_without_improvement = 0;
        } else {
          ++rounds_without_improvement;
          if (rounds_without_improvement >= config.patience) {
            result.early_stopped = true;
            done = true;
          }
        }
      }
      result.log.push_back(entry);
      if (step >= config.max_steps) done = true;
    }
  }

  if (!best_values.empty()) store.restore_values(best_values);
  return result;
}

}  // namespace motion
