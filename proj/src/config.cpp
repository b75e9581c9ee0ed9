#include "motion/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "motion/metrics.hpp"

namespace motion {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing text");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "': bad number '" + v + "'");
  }
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(v, &used);
    if (used != v.size() || (!v.empty() && v[0] == '-'))
      throw std::invalid_argument("trailing text");
    return n;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "': bad count '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("config: key '" + key + "': expected true or false, got '" +
                              v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw std::invalid_argument("config: key '" + key + "': empty list");
  return out;
}

std::string fmt_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += fmt(values[i]);
  }
  return out;
}

}  // namespace

const char* family_name(Family family) {
  switch (family) {
    case Family::Rnn: return "rnn";
    case Family::Seq2seq: return "seq2seq";
    case Family::ZeroVelocity: return "zero_velocity";
  }
  throw std::invalid_argument("config: bad family value");
}

Family family_from_name(const std::string& name) {
  if (name == "rnn") return Family::Rnn;
  if (name == "seq2seq") return Family::Seq2seq;
  if (name == "zero_velocity") return Family::ZeroVelocity;
  throw std::invalid_argument("config: unknown model family '" + name + "'");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "skeleton") skeleton = value;
  else if (key == "representation") representation = rep_from_name(value);
  else if (key == "fps") fps = parse_double(key, value);
  else if (key == "synth_sequences") synth_sequences = parse_count(key, value);
  else if (key == "synth_frames") synth_frames = parse_count(key, value);
  else if (key == "synth_harmonics") synth_harmonics = parse_count(key, value);
  else if (key == "synth_amp_min") synth_amp_min = parse_double(key, value);
  else if (key == "synth_amp_max") synth_amp_max = parse_double(key, value);
  else if (key == "synth_freq_min") synth_freq_min = parse_double(key, value);
  else if (key == "synth_freq_max") synth_freq_max = parse_double(key, value);
  else if (key == "synth_noise_std") synth_noise_std = parse_double(key, value);
  else if (key == "split_train") split_train = parse_double(key, value);
  else if (key == "split_valid") split_valid = parse_double(key, value);
  else if (key == "split_test") split_test = parse_double(key, value);
  else if (key == "model") family = family_from_name(value);
  else if (key == "cell") cell = grad::cell_from_name(value);
  else if (key == "units") units = parse_count(key, value);
  else if (key == "projection") projection = parse_count(key, value);
  else if (key == "input_dropout") input_dropout = parse_double(key, value);
  else if (key == "head") head = head_kind_from_name(value);
  else if (key == "hierarchy") hierarchy = hierarchy_from_name(value);
  else if (key == "feeding") feeding = feeding_from_name(value);
  else if (key == "spl_hidden") spl_hidden = parse_count(key, value);
  else if (key == "spl_random_seed") spl_random_seed = parse_count(key, value);
  else if (key == "dense_hidden") dense_hidden = parse_count(key, value);
  else if (key == "residual") residual = parse_bool(key, value);
  else if (key == "decoder_feeding") decoder_feeding = decoder_feeding_from_name(value);
  else if (key == "batch_size") batch_size = parse_count(key, value);
  else if (key == "learning_rate") learning_rate = parse_double(key, value);
  else if (key == "decay_rate") decay_rate = parse_double(key, value);
  else if (key == "decay_steps") decay_steps = parse_count(key, value);
  else if (key == "max_steps") max_steps = parse_count(key, value);
  else if (key == "patience") patience = parse_count(key, value);
  else if (key == "valid_interval") valid_interval = parse_count(key, value);
  else if (key == "seed_frames") seed_frames = parse_count(key, value);
  else if (key == "target_frames") target_frames = parse_count(key, value);
  else if (key == "stride") stride = parse_count(key, value);
  else if (key == "horizons_ms") horizons_ms = parse_list(key, value);
  else if (key == "pck_grid") pck_grid = value == "default" ? std::vector<double>{}
                                                            : parse_list(key, value);
  else if (key == "seed") seed = parse_count(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": empty key");
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": duplicate key '" + key + "'");
    }
    try {
      cfg.set(key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  const auto kv = [&](const std::string& k, const std::string& v) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  };
  out += "# data\n";
  kv("skeleton", skeleton);
  kv("representation", rep_name(representation));
  kv("fps", fmt(fps));
  kv("synth_sequences", std::to_string(synth_sequences));
  kv("synth_frames", std::to_string(synth_frames));
  kv("synth_harmonics", std::to_string(synth_harmonics));
  kv("synth_amp_min", fmt(synth_amp_min));
  kv("synth_amp_max", fmt(synth_amp_max));
  kv("synth_freq_min", fmt(synth_freq_min));
  kv("synth_freq_max", fmt(synth_freq_max));
  kv("synth_noise_std", fmt(synth_noise_std));
  kv("split_train", fmt(split_train));
  kv("split_valid", fmt(split_valid));
  kv("split_test", fmt(split_test));
  out += "\n# model\n";
  kv("model", family_name(family));
  kv("cell", grad::cell_name(cell));
  kv("units", std::to_string(units));
  kv("projection", std::to_string(projection));
  kv("input_dropout", fmt(input_dropout));
  kv("head", head_kind_name(head));
  kv("hierarchy", hierarchy_name(hierarchy));
  kv("feeding", feeding_name(feeding));
  kv("spl_hidden", std::to_string(spl_hidden));
  kv("spl_random_seed", std::to_string(spl_random_seed));
  kv("dense_hidden", std::to_string(dense_hidden));
  kv("residual", residual ? "true" : "false");
  kv("decoder_feeding", decoder_feeding_name(decoder_feeding));
  out += "\n# training\n";
  kv("batch_size", std::to_string(batch_size));
  kv("learning_rate", fmt(learning_rate));
  kv("decay_rate", fmt(decay_rate));
  kv("decay_steps", std::to_string(decay_steps));
  kv("max_steps", std::to_string(max_steps));
  kv("patience", std::to_string(patience));
  kv("valid_interval", std::to_string(valid_interval));
  out += "\n# windows and evaluation\n";
  kv("seed_frames", std::to_string(seed_frames));
  kv("target_frames", std::to_string(target_frames));
  kv("stride", std::to_string(stride));
  kv("horizons_ms", fmt_list(horizons_ms));
  kv("pck_grid", pck_grid.empty() ? "default" : fmt_list(pck_grid));
  kv("seed", std::to_string(seed));
  return out;
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  out << serialize();
  if (!out) throw std::runtime_error("io: short write to '" + path + "'");
}

void ExperimentConfig::validate() const {
  if (skeleton.empty()) throw std::invalid_argument("config: skeleton path is empty");
  if (fps <= 0.0) throw std::invalid_argument("config: fps must be positive");
  const double total = split_train + split_valid + split_test;
  if (split_train <= 0.0 || split_valid < 0.0 || split_test < 0.0 ||
      std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("config: split ratios must be nonnegative and sum to 1");
  }
  if (horizons_ms.empty()) throw std::invalid_argument("config: horizons_ms is empty");
  for (std::size_t i = 0; i < horizons_ms.size(); ++i) {
    if (horizons_ms[i] <= 0.0)
      throw std::invalid_argument("config: horizons_ms must be positive");
    if (i && horizons_ms[i] <= horizons_ms[i - 1])
      throw std::invalid_argument("config: horizons_ms must be strictly ascending");
  }
  window_spec().validate();
  task().validate();
  if (family != Family::ZeroVelocity) {
    model_config().validate();
    train_config().validate();
  }
  // Synth keys only matter to the synth command, but a resolved config is
  // archived whole, so they must always be coherent.
  synth_config(1).validate();
}

SynthConfig ExperimentConfig::synth_config(std::size_t joints) const {
  SynthConfig out;
  out.sequences = synth_sequences;
  out.frames = synth_frames;
  out.joints = joints;
  out.fps = fps;
  out.harmonics = synth_harmonics;
  out.amp_min = synth_amp_min;
  out.amp_max = synth_amp_max;
  out.freq_min = synth_freq_min;
  out.freq_max = synth_freq_max;
  out.noise_std = synth_noise_std;
  out.seed = seed;
  out.repr = representation;
  return out;
}

ModelConfig ExperimentConfig::model_config() const {
  if (family == Family::ZeroVelocity) {
    throw std::invalid_argument("config: zero_velocity has no model parameters");
  }
  ModelConfig out;
  out.kind = family == Family::Rnn ? ModelKind::Rnn : ModelKind::Seq2seq;
  out.cell = cell;
  out.units = units;
  out.projection = projection;
  out.input_dropout = input_dropout;
  out.head = head;
  out.hierarchy = hierarchy;
  out.feeding = feeding;
  out.spl_hidden = spl_hidden;
  out.spl_random_seed = spl_random_seed;
  out.dense_hidden = dense_hidden;
  out.residual = residual;
  out.decoder_feeding = decoder_feeding;
  return out;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig out;
  out.batch_size = batch_size;
  out.schedule = {learning_rate, decay_rate, decay_steps};
  out.max_steps = max_steps;
  out.patience = patience;
  out.valid_interval = valid_interval;
  out.seed = seed;
  return out;
}

WindowSpec ExperimentConfig::window_spec() const {
  return {seed_frames, target_frames, stride};
}

PredictionTask ExperimentConfig::task() const {
  return {seed_frames, target_frames, fps};
}

std::vector<double> ExperimentConfig::grid() const {
  return pck_grid.empty() ? default_pck_grid() : pck_grid;
}

}  // namespace motion
