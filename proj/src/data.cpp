#include "motion/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "motion/util.hpp"

namespace motion {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'T', 'N'};
constexpr std::uint8_t kVersion = 1;

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

}  // namespace

PoseSequence parse_motn(std::span<const unsigned char> bytes, const std::string& origin) {
  const std::string where = "motion file '" + origin + "': ";
  if (bytes.size() < 16) throw MotnError(MotnError::Kind::Truncated, where + "shorter than the 16-byte header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw MotnError(MotnError::Kind::BadMagic, where + "bad magic");
  }
  const std::uint8_t version = bytes[4];
  if (version != kVersion) {
    throw MotnError(MotnError::Kind::BadHeader,
                    where + "unsupported version " + std::to_string(version));
  }
  const std::uint8_t rep_byte = bytes[5];
  if (rep_byte > 2) {
    throw MotnError(MotnError::Kind::BadRepresentation,
                    where + "unknown representation byte " + std::to_string(rep_byte));
  }
  const auto rep = static_cast<Representation>(rep_byte);
  const std::uint16_t joints = get_u16(bytes.data() + 6);
  if (joints == 0) throw MotnError(MotnError::Kind::BadHeader, where + "zero joints");
  const float fps = get_f32(bytes.data() + 8);
  if (!std::isfinite(fps) || fps <= 0.0f) {
    throw MotnError(MotnError::Kind::BadHeader, where + "fps must be finite and positive");
  }
  const std::uint32_t frames = get_u32(bytes.data() + 12);

  const std::uint64_t values =
      static_cast<std::uint64_t>(frames) * joints * rep_size(rep);
  const std::uint64_t expected = 16 + values * 4;
  if (bytes.size() < expected) {
    throw MotnError(MotnError::Kind::Truncated,
                    where + "payload needs " + std::to_string(expected) + " bytes, file has " +
                        std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw MotnError(MotnError::Kind::BadPayload,
                    where + std::to_string(bytes.size() - expected) + " trailing bytes");
  }

  PoseSequence seq;
  seq.repr = rep;
  seq.joints = joints;
  seq.fps = static_cast<double>(fps);
  const std::size_t width = seq.frame_size();
  seq.frames.assign(frames, std::vector<double>(width));
  const unsigned char* p = bytes.data() + 16;
  for (std::uint32_t t = 0; t < frames; ++t) {
    auto& row = seq.frames[t];
    for (std::size_t i = 0; i < width; ++i, p += 4) {
      const float v = get_f32(p);
      if (!std::isfinite(v)) {
        throw MotnError(MotnError::Kind::BadPayload,
                        where + "non-finite value at frame " + std::to_string(t));
      }
      row[i] = static_cast<double>(v);
    }
  }
  return seq;
}

PoseSequence read_motn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MotnError(MotnError::Kind::Io, "motion file '" + path + "': cannot open");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw MotnError(MotnError::Kind::Io, "motion file '" + path + "': read failed");
  return parse_motn(
      std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(blob.data()),
                                     blob.size()),
      path);
}

void write_motn(const std::string& path, const PoseSequence& seq) {
  seq.validate();
  if (seq.joints > 0xffff) {
    throw MotnError(MotnError::Kind::BadHeader, "motion file: joints exceed u16");
  }
  if (seq.frames.size() > 0xffffffffULL) {
    throw MotnError(MotnError::Kind::BadHeader, "motion file: frame count exceeds u32");
  }
  std::string out;
  out.reserve(16 + seq.frames.size() * seq.frame_size() * 4);
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(kVersion));
  out.push_back(static_cast<char>(seq.repr));
  put_u16(out, static_cast<std::uint16_t>(seq.joints));
  put_f32(out, static_cast<float>(seq.fps));
  put_u32(out, static_cast<std::uint32_t>(seq.frames.size()));
  for (const auto& row : seq.frames) {
    for (double v : row) put_f32(out, static_cast<float>(v));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw MotnError(MotnError::Kind::Io, "motion file '" + path + "': cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f) throw MotnError(MotnError::Kind::Io, "motion file '" + path + "': write failed");
}

void WindowSpec::validate() const {
  if (seed_frames == 0 || target_frames == 0) {
    throw std::invalid_argument("window spec: seed and target frames must be positive");
  }
  if (stride == 0) throw std::invalid_argument("window spec: stride must be positive");
}

std::vector<std::size_t> extract_windows(std::size_t frames, const WindowSpec& spec) {
  spec.validate();
  std::vector<std::size_t> starts;
  const std::size_t len = spec.length();
  if (frames < len) return starts;
  const std::size_t count = (frames - len) / spec.stride + 1;
  starts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) starts.push_back(i * spec.stride);
  return starts;
}

SplitResult split_dataset(std::vector<std::string> paths,
                          const std::array<double, 3>& ratios, std::uint64_t seed) {
  for (double r : ratios) {
    if (r < 0.0) throw std::invalid_argument("split: ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split: ratios must sum to 1");
  }

  std::sort(paths.begin(), paths.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(paths));

  SplitResult out;
  const std::size_t n = paths.size();
  std::size_t n_train = static_cast<std::size_t>(ratios[0] * static_cast<double>(n));
  std::size_t n_valid = static_cast<std::size_t>(ratios[1] * static_cast<double>(n));
  if (n > 0 && n_train == 0) {
    out.fallback = true;
    n_train = n;
    n_valid = 0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      out.train.push_back(paths[i]);
    } else if (i < n_train + n_valid) {
      out.valid.push_back(paths[i]);
    } else {
      out.test.push_back(paths[i]);
    }
  }
  return out;
}

NormStats NormStats::fit(std::span<const PoseSequence> sequences) {
  std::size_t dim = 0;
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    seq.validate();
    if (dim == 0) {
      dim = seq.frame_size();
    } else if (seq.frame_size() != dim) {
      throw std::invalid_argument("norm fit: sequences have differing frame widths");
    }
    count += seq.frames.size();
  }
  if (dim == 0 || count == 0) {
    throw std::invalid_argument("norm fit: no frames to fit on");
  }

  NormStats stats;
  stats.mean.assign(dim, 0.0);
  stats.stddev.assign(dim, 0.0);
  for (const auto& seq : sequences) {
    for (const auto& row : seq.frames) {
      for (std::size_t i = 0; i < dim; ++i) stats.mean[i] += row[i];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(count);
  for (auto& m : stats.mean) m *= inv_n;
  for (const auto& seq : sequences) {
    for (const auto& row : seq.frames) {
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = row[i] - stats.mean[i];
        stats.stddev[i] += d * d;
      }
    }
  }
  for (auto& s : stats.stddev) s = std::max(std::sqrt(s * inv_n), 1e-8);
  return stats;
}

std::vector<double> NormStats::apply(std::span<const double> frame) const {
  if (frame.size() != dim()) throw std::invalid_argument("norm apply: width mismatch");
  std::vector<double> out(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out[i] = (frame[i] - mean[i]) / stddev[i];
  }
  return out;
}

std::vector<double> NormStats::invert(std::span<const double> frame) const {
  if (frame.size() != dim()) throw std::invalid_argument("norm invert: width mismatch");
  std::vector<double> out(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out[i] = mean[i] + stddev[i] * frame[i];
  }
  return out;
}

std::string NormStats::serialize() const {
  char buf[32];
  std::string out = "mean=";
  for (std::size_t i = 0; i < mean.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", mean[i]);
    if (i) out += ',';
    out += buf;
  }
  out += ";std=";
  for (std::size_t i = 0; i < stddev.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", stddev[i]);
    if (i) out += ',';
    out += buf;
  }
  return out;
}

NormStats NormStats::deserialize(const std::string& text) {
  const auto semi = text.find(";std=");
  if (text.rfind("mean=", 0) != 0 || semi == std::string::npos) {
    throw std::invalid_argument("norm stats: malformed serialization");
  }
  auto parse_list = [](const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (item.empty()) throw std::invalid_argument("norm stats: empty element");
      out.push_back(std::stod(item));
    }
    return out;
  };
  NormStats stats;
  stats.mean = parse_list(text.substr(5, semi - 5));
  stats.stddev = parse_list(text.substr(semi + 5));
  if (stats.mean.size() != stats.stddev.size() || stats.mean.empty()) {
    throw std::invalid_argument("norm stats: mean/std lengths disagree");
  }
  return stats;
}

void SynthConfig::validate() const {
  if (sequences == 0 || frames == 0 || joints == 0) {
    throw std::invalid_argument("synth: sequences, frames and joints must be positive");
  }
  if (!(fps > 0.0)) throw std::invalid_argument("synth: fps must be positive");
  if (harmonics == 0) throw std::invalid_argument("synth: harmonics must be positive");
  if (!(amp_min > 0.0) || amp_max < amp_min) {
    throw std::invalid_argument("synth: amplitude range must satisfy 0 < min <= max");
  }
  if (!(freq_min > 0.0) || freq_max < freq_min) {
    throw std::invalid_argument("synth: frequency range must satisfy 0 < min <= max");
  }
  if (noise_std < 0.0) throw std::invalid_argument("synth: noise std must be non-negative");
}

PoseSequence synth_sequence(const SynthConfig& config, std::size_t index) {
  config.validate();
  Rng rng(derive_seed(config.seed, index));

  struct JointParams {
    Vec3 axis;
    std::vector<double> amp, freq, phase;
  };
  std::vector<JointParams> params(config.joints);
  for (auto& jp : params) {
    Vec3 axis;
    double n = 0.0;
    do {
      axis = {rng.gauss(), rng.gauss(), rng.gauss()};
      n = axis.norm();
    } while (n < 1e-6);
    jp.axis = axis * (1.0 / n);
    double amp_sum = 0.0;
    for (std::size_t i = 0; i < config.harmonics; ++i) {
      jp.amp.push_back(rng.uniform(config.amp_min, config.amp_max));
      jp.freq.push_back(rng.uniform(config.freq_min, config.freq_max));
      jp.phase.push_back(rng.uniform(0.0, 2.0 * kPi));
      amp_sum += std::abs(jp.amp.back());
    }
    if (amp_sum > kPi / 2.0) {
      const double scale = (kPi / 2.0) / amp_sum;
      for (auto& a : jp.amp) a *= scale;
    }
  }

  PoseSequence seq;
  seq.repr = Representation::AngleAxis;
  seq.joints = config.joints;
  seq.fps = config.fps;
  seq.frames.assign(config.frames, std::vector<double>(config.joints * 3));
  for (std::size_t t = 0; t < config.frames; ++t) {
    const double time = static_cast<double>(t) / config.fps;
    auto& row = seq.frames[t];
    for (std::size_t k = 0; k < config.joints; ++k) {
      const auto& jp = params[k];
      double angle = 0.0;
      for (std::size_t i = 0; i < jp.amp.size(); ++i) {
        angle += jp.amp[i] * std::sin(2.0 * kPi * jp.freq[i] * time + jp.phase[i]);
      }
      if (config.noise_std > 0.0) angle += config.noise_std * rng.gauss();
      row[3 * k + 0] = jp.axis.x * angle;
      row[3 * k + 1] = jp.axis.y * angle;
      row[3 * k + 2] = jp.axis.z * angle;
    }
  }
  if (config.repr != Representation::AngleAxis) {
    return convert_sequence(seq, config.repr);
  }
  return seq;
}

std::vector<PoseSequence> synth_generate(const SynthConfig& config) {
  config.validate();
  std::vector<PoseSequence> out;
  out.reserve(config.sequences);
  for (std::size_t s = 0; s < config.sequences; ++s) {
    out.push_back(synth_sequence(config, s));
  }
  return out;
}

std::vector<std::string> list_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::invalid_argument("dataset: '" + dir + "' is not a directory");
  }
  std::vector<std::string> names;
  const fs::path manifest = fs::path(dir) / "manifest.txt";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    if (!in) throw std::invalid_argument("dataset: cannot open " + manifest.string());
    std::string line;
    while (std::getline(in, line)) {
      const auto hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line.erase(hash_pos);
      std::istringstream ls(line);
      std::string name;
      if (ls >> name) names.push_back(name);
    }
  } else {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".motn") {
        names.push_back(entry.path().filename().string());
      }
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

void write_manifest(const std::string& dir, std::span<const std::string> names) {
  std::vector<std::string> sorted(names.begin(), names.end());
  std::sort(sorted.begin(), sorted.end());
  const std::string path = (std::filesystem::path(dir) / "manifest.txt").string();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::invalid_argument("dataset: cannot write " + path);
  for (const auto& n : sorted) out << n << "\n";
}

}  // namespace motion
