#include "motion/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "motion/grad/checkpoint.hpp"
#include "motion/metrics.hpp"
#include "motion/util.hpp"

namespace motion {
namespace fs = std::filesystem;

const char* const kToolVersion = "motionkit 0.1.0";
const char* const kZeroVelocitySource = "zero_velocity";

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("io: short write to '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void prepare_dir(const ExperimentConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_text((fs::path(out_dir) / "config.resolved.cfg").string(),
             std::string("# ") + kToolVersion + "\n" + config.serialize());
}

/// Skeleton in its own parser format, offsets at full precision.
std::string serialize_skeleton(const SkeletonSpec& skel) {
  std::string out;
  for (std::size_t k = 0; k < skel.joints(); ++k) {
    out += skel.names[k];
    out += ' ';
    out += skel.parents[k] < 0
               ? "root"
               : skel.names[static_cast<std::size_t>(skel.parents[k])];
    out += ' ';
    out += fmt(skel.offsets[k].x) + " " + fmt(skel.offsets[k].y) + " " +
           fmt(skel.offsets[k].z);
    if (k == skel.unit_bone) out += " unit";
    out += '\n';
  }
  return out;
}

/// The narrowed fps a clip header actually stores.
double disk_fps(double fps) { return static_cast<double>(static_cast<float>(fps)); }

void check_clip(const PoseSequence& seq, const std::string& name,
                const ExperimentConfig& config, const SkeletonSpec& skel) {
  if (seq.repr != config.representation) {
    throw std::invalid_argument(
        "dataset: '" + name + "' stores " + rep_name(seq.repr) +
        " poses but the config expects " + rep_name(config.representation));
  }
  if (seq.joints != skel.joints()) {
    throw std::invalid_argument("dataset: '" + name + "' has " +
                                std::to_string(seq.joints) + " joints, skeleton has " +
                                std::to_string(skel.joints()));
  }
  if (seq.fps != disk_fps(config.fps)) {
    throw std::invalid_argument("dataset: '" + name + "' runs at " + fmt(seq.fps) +
                                " fps, config expects " + fmt(config.fps));
  }
}

std::vector<PoseSequence> load_clips(const std::string& dir,
                                     std::span<const std::string> names,
                                     const ExperimentConfig& config,
                                     const SkeletonSpec& skel) {
  std::vector<PoseSequence> out;
  out.reserve(names.size());
  for (const auto& name : names) {
    PoseSequence seq = read_motn((fs::path(dir) / name).string());
    check_clip(seq, name, config, skel);
    out.push_back(std::move(seq));
  }
  return out;
}

PoseSequence sequence_from_frames(std::vector<std::vector<double>> frames,
                                  const ExperimentConfig& config, std::size_t joints) {
  PoseSequence seq;
  seq.repr = config.representation;
  seq.joints = joints;
  seq.fps = disk_fps(config.fps);
  seq.frames = std::move(frames);
  return seq;
}

std::string model_label(const ModelConfig& mc) {
  std::string label = model_kind_name(mc.kind);
  label += '_';
  if (mc.head == HeadKind::Spl) {
    label += std::string("spl_") + hierarchy_name(mc.hierarchy);
  } else {
    label += "dense";
  }
  return label;
}

const std::string& meta_need(const std::map<std::string, std::string>& meta,
                             const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) {
    throw grad::CheckpointError("checkpoint: metadata misses '" + key + "'");
  }
  return it->second;
}

}  // namespace

void cmd_synth(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  const SkeletonSpec skel = load_skeleton(config.skeleton);
  const auto clips = synth_generate(config.synth_config(skel.joints()));

  prepare_dir(config, out_dir);
  std::vector<std::string> names;
  names.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "seq_%04zu.motn", i);
    write_motn((fs::path(out_dir) / name).string(), clips[i]);
    names.emplace_back(name);
  }
  write_manifest(out_dir, names);
}

void cmd_train(const ExperimentConfig& config, const std::string& data_dir,
               const std::string& out_dir) {
  config.validate();
  if (config.family == Family::ZeroVelocity) {
    throw std::invalid_argument("config: zero_velocity has nothing to train");
  }
  const SkeletonSpec skel = load_skeleton(config.skeleton);

  const auto split = split_dataset(list_dataset(data_dir),
                                   {config.split_train, config.split_valid,
                                    config.split_test},
                                   config.seed);
  const auto train_clips = load_clips(data_dir, split.train, config, skel);
  const auto valid_clips = load_clips(data_dir, split.valid, config, skel);

  const WindowSpec wspec = config.window_spec();
  const auto train_windows = cut_windows(train_clips, wspec);
  const auto valid_windows = cut_windows(valid_clips, wspec);
  if (train_windows.empty()) {
    throw std::invalid_argument("dataset: no training window fits " +
                                std::to_string(wspec.length()) + " frames");
  }

  const NormStats stats = NormStats::fit(train_clips);
  grad::ParameterStore store(derive_seed(config.seed, 3));
  SequenceModel model(skel, config.representation, config.model_config(), store);
  const TrainResult result =
      train_model(model, store, train_windows, valid_windows, skel, config.task(),
                  stats, config.train_config());

  prepare_dir(config, out_dir);

  std::map<std::string, std::string> meta = config.model_config().to_meta();
  meta["data.representation"] = rep_name(config.representation);
  meta["data.joints"] = std::to_string(skel.joints());
  meta["data.skeleton"] = serialize_skeleton(skel);
  meta["data.skeleton_hash"] = skel.hash_hex();
  meta["data.norm_stats"] = stats.serialize();
  meta["task.seed_frames"] = std::to_string(config.seed_frames);
  meta["task.target_frames"] = std::to_string(config.target_frames);
  meta["task.fps"] = fmt(config.fps);
  meta["train.steps"] = std::to_string(result.steps);
  meta["train.best_step"] = std::to_string(result.best_step);
  meta["train.best_metric"] = fmt(result.best_metric);
  meta["tool.version"] = kToolVersion;
  save_checkpoint((fs::path(out_dir) / "model.ckpt").string(), store, meta);

  std::string log = "step,loss,learning_rate,valid_joint_angle\n";
  for (const auto& entry : result.log) {
    log += std::to_string(entry.step) + "," + fmt(entry.loss) + "," + fmt(entry.lr) +
           "," + (entry.validated ? fmt(entry.valid_metric) : "") + "\n";
  }
  write_text((fs::path(out_dir) / "train_log.csv").string(), log);
}

void cmd_predict(const std::string& checkpoint, const std::string& seed_file,
                 std::size_t horizon, const std::string& out_file) {
  if (horizon == 0) throw std::invalid_argument("predict: horizon must be positive");
  grad::LoadedCheckpoint ckpt = grad::load_checkpoint(checkpoint);
  const ModelConfig mc = ModelConfig::from_meta(ckpt.meta);
  const SkeletonSpec skel = parse_skeleton(meta_need(ckpt.meta, "data.skeleton"));
  const Representation repr = rep_from_name(meta_need(ckpt.meta, "data.representation"));
  const NormStats stats =
      NormStats::deserialize(meta_need(ckpt.meta, "data.norm_stats"));

  const PoseSequence seed = read_motn(seed_file);
  if (seed.repr != repr) {
    throw std::invalid_argument("predict: seed stores " + std::string(rep_name(seed.repr)) +
                                " poses, checkpoint expects " + rep_name(repr));
  }
  if (seed.joints != skel.joints()) {
    throw std::invalid_argument("predict: seed has " + std::to_string(seed.joints) +
                                " joints, checkpoint expects " +
                                std::to_string(skel.joints()));
  }

  // Registration runs against the loaded store, so trained values survive.
  const SequenceModel model(skel, repr, mc, ckpt.store);
  const PoseSequence out = predict(model, ckpt.store, seed, horizon, stats);
  const fs::path parent = fs::path(out_file).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_motn(out_file, out);
}

void cmd_eval(const ExperimentConfig& config, const std::string& source,
              const std::string& data_dir, const std::string& out_dir) {
  config.validate();
  const SkeletonSpec skel = load_skeleton(config.skeleton);

  const auto split = split_dataset(list_dataset(data_dir),
                                   {config.split_train, config.split_valid,
                                    config.split_test},
                                   config.seed);
  const auto test_clips = load_clips(data_dir, split.test, config, skel);
  const WindowSpec wspec = config.window_spec();
  const auto windows = cut_windows(test_clips, wspec);
  if (windows.empty()) {
    throw std::invalid_argument("dataset: no evaluation window fits " +
                                std::to_string(wspec.length()) + " frames");
  }

  const std::size_t S = wspec.seed_frames, P = wspec.target_frames;
  std::string label = kZeroVelocitySource;
  std::vector<EvalPair> pairs;
  pairs.reserve(windows.size());

  const auto pair_of = [&](const Window& window, auto&& roll) {
    const PoseSequence seed = sequence_from_frames(
        {window.begin(), window.begin() + static_cast<std::ptrdiff_t>(S)}, config,
        skel.joints());
    const PoseSequence target = sequence_from_frames(
        {window.begin() + static_cast<std::ptrdiff_t>(S), window.end()}, config,
        skel.joints());
    return EvalPair{roll(seed), target, P};
  };

  if (source == kZeroVelocitySource) {
    for (const auto& w : windows) {
      pairs.push_back(pair_of(w, [&](const PoseSequence& seed) {
        return zero_velocity_predict(seed, P);
      }));
    }
  } else {
    grad::LoadedCheckpoint ckpt = grad::load_checkpoint(source);
    const std::string& ckpt_hash = meta_need(ckpt.meta, "data.skeleton_hash");
    if (ckpt_hash != skel.hash_hex()) {
      throw std::invalid_argument("eval: checkpoint skeleton " + ckpt_hash +
                                  " does not match config skeleton " + skel.hash_hex());
    }
    const Representation repr =
        rep_from_name(meta_need(ckpt.meta, "data.representation"));
    if (repr != config.representation) {
      throw std::invalid_argument(
          "eval: checkpoint representation " + std::string(rep_name(repr)) +
          " does not match config " + rep_name(config.representation));
    }
    const ModelConfig mc = ModelConfig::from_meta(ckpt.meta);
    const NormStats stats =
        NormStats::deserialize(meta_need(ckpt.meta, "data.norm_stats"));
    const SequenceModel model(skel, repr, mc, ckpt.store);
    label = model_label(mc);
    for (const auto& w : windows) {
      pairs.push_back(pair_of(w, [&](const PoseSequence& seed) {
        return predict(model, ckpt.store, seed, P, stats);
      }));
    }
  }

  const MetricReport report =
      build_report(pairs, normalize_bones(skel), disk_fps(config.fps),
                   config.horizons_ms, Accumulate::Until, config.grid());

  prepare_dir(config, out_dir);
  // No absolute paths here: the report must come out byte-identical no
  // matter where the inputs lived.
  const std::map<std::string, std::string> meta{
      {"model", label},
      {"skeleton_hash", skel.hash_hex()},
      {"windows", std::to_string(windows.size())},
      {"tool", kToolVersion},
  };
  write_text((fs::path(out_dir) / "report.csv").string(), report_csv(report, meta));
  write_text((fs::path(out_dir) / "pck.svg").string(), pck_curves_svg(report));
}

namespace {

/// One parsed evaluation report: '#' header fields plus (metric, horizon)
/// cells kept as their original strings so merging never reformats numbers.
struct EvalDoc {
  std::map<std::string, std::string> header;
  std::vector<std::string> horizons;  // ms strings in row order
  std::map<std::string, std::string> cells;  // "metric@ms" -> value
};

EvalDoc parse_report(const std::string& path) {
  EvalDoc doc;
  std::stringstream ss(read_text(path));
  std::string line;
  bool saw_header = false;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto start = line.find_first_not_of("# ");
      if (start == std::string::npos) continue;
      const std::string body = line.substr(start);
      const auto eq = body.find('=');
      if (eq != std::string::npos) doc.header[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (!saw_header) {
      if (line != "metric,horizon_ms,frame,mode,value") {
        throw std::runtime_error("report: '" + path + "' has unexpected columns: " +
                                 line);
      }
      saw_header = true;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream row(line);
    std::string col;
    while (std::getline(row, col, ',')) cols.push_back(col);
    if (cols.size() != 5) {
      throw std::runtime_error("report: '" + path + "' has a malformed row: " + line);
    }
    const std::string key = cols[0] + "@" + cols[1];
    if (!doc.cells.emplace(key, cols[4]).second) {
      throw std::runtime_error("report: '" + path + "' repeats cell " + key);
    }
    if (cols[0] == "euler") doc.horizons.push_back(cols[1]);  // one row group per horizon
  }
  if (doc.horizons.empty()) {
    throw std::runtime_error("report: '" + path + "' contains no metric rows");
  }
  return doc;
}

}  // namespace

void cmd_report(const std::vector<std::string>& eval_dirs, const std::string& out_file) {
  if (eval_dirs.empty()) {
    throw std::invalid_argument("report: need at least one evaluation directory");
  }
  std::vector<EvalDoc> docs;
  docs.reserve(eval_dirs.size());
  for (const auto& dir : eval_dirs) {
    docs.push_back(parse_report((fs::path(dir) / "report.csv").string()));
  }

  const auto consistent = [&](const std::string& key) {
    const auto it = docs.front().header.find(key);
    const std::string first = it == docs.front().header.end() ? "" : it->second;
    for (std::size_t i = 1; i < docs.size(); ++i) {
      const auto jt = docs[i].header.find(key);
      const std::string other = jt == docs[i].header.end() ? "" : jt->second;
      if (other != first) {
        throw std::invalid_argument("report: '" + eval_dirs[i] + "' disagrees on " +
                                    key + " (" + other + " vs " + first + ")");
      }
    }
    return first;
  };
  const std::string skeleton_hash = consistent("skeleton_hash");
  const std::string grid = consistent("pck_grid");
  const std::string mode = consistent("mode");
  const std::string fps = consistent("fps");
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].horizons != docs.front().horizons) {
      throw std::invalid_argument("report: '" + eval_dirs[i] +
                                  "' evaluates different horizons");
    }
  }

  static const char* const kMetrics[] = {"euler", "joint_angle", "positional",
                                         "pck_auc"};
  std::string out;
  out += "# fps=" + fps + "\n";
  out += "# mode=" + mode + "\n";
  out += "# pck_grid=" + grid + "\n";
  out += "# skeleton_hash=" + skeleton_hash + "\n";
  out += "model";
  for (const char* metric : kMetrics) {
    for (const auto& ms : docs.front().horizons) {
      out += "," + std::string(metric) + "_" + ms + "ms";
    }
  }
  out += "\n";
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto it = docs[i].header.find("model");
    if (it == docs[i].header.end()) {
      throw std::runtime_error("report: '" + eval_dirs[i] + "' names no model");
    }
    out += it->second;
    for (const char* metric : kMetrics) {
      for (const auto& ms : docs[i].horizons) {
        const auto cell = docs[i].cells.find(std::string(metric) + "@" + ms);
        if (cell == docs[i].cells.end()) {
          throw std::runtime_error("report: '" + eval_dirs[i] + "' misses " +
                                   metric + (" at " + ms) + " ms");
        }
        out += "," + cell->second;
      }
    }
    out += "\n";
  }

  const fs::path parent = fs::path(out_file).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_text(out_file, out);
}

}  // namespace motion
