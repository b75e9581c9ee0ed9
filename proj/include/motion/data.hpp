#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "motion/pose.hpp"

namespace motion {

/// Errors from the binary motion format, tagged so callers can react without
/// string matching.
class MotnError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, BadHeader, BadRepresentation, Truncated, BadPayload };

  MotnError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Binary clip format, little-endian. 16-byte header:
///   magic "MOTN" | version u8 (= 1) | representation u8 | joints u16 |
///   fps f32 | frames u32
/// followed by frames * joints * rep_size float32 payload values. In-memory
/// data stays double; only this format narrows to 32 bits.
PoseSequence read_motn(const std::string& path);
PoseSequence parse_motn(std::span<const unsigned char> bytes, const std::string& origin);
void write_motn(const std::string& path, const PoseSequence& seq);

struct WindowSpec {
  std::size_t seed_frames = 120;
  std::size_t target_frames = 24;
  std::size_t stride = 24;

  std::size_t length() const { return seed_frames + target_frames; }
  void validate() const;
};

/// Start offsets of every full seed+target window; a clip shorter than one
/// window yields none.
std::vector<std::size_t> extract_windows(std::size_t frames, const WindowSpec& spec);

struct SplitResult {
  std::vector<std::string> train, valid, test;
  bool fallback = false;  // true when the dataset was too small to split
};

/// Sorts paths lexicographically, shuffles with the seed, then cuts
/// floor(r_train*n) / floor(r_valid*n) / remainder. If that would leave the
/// training set empty, everything goes to train and `fallback` is set.
SplitResult split_dataset(std::vector<std::string> paths,
                          const std::array<double, 3>& ratios, std::uint64_t seed);

/// Per-component standardization; sigma is floored at 1e-8 so constant
/// channels stay finite.
struct NormStats {
  std::vector<double> mean, stddev;

  static NormStats fit(std::span<const PoseSequence> sequences);
  std::vector<double> apply(std::span<const double> frame) const;
  std::vector<double> invert(std::span<const double> frame) const;
  std::size_t dim() const { return mean.size(); }

  std::string serialize() const;  // "%.17g" comma lists, round-trips exactly
  static NormStats deserialize(const std::string& text);
};

/// Sinusoidal motion synthesizer. Each joint gets a fixed random rotation
/// axis and `harmonics` sine terms; amplitudes are rescaled when their
/// absolute sum exceeds pi/2 so angles keep a safe margin from the log-map
/// boundary. angle_k(t) = sum_i a_i sin(2 pi f_i t / fps + phi_i) + noise,
/// with t counted from frame 0.
struct SynthConfig {
  std::size_t sequences = 60;
  std::size_t frames = 600;
  std::size_t joints = 15;
  double fps = 60.0;
  std::size_t harmonics = 2;
  double amp_min = 0.1, amp_max = 0.6;   // radians
  double freq_min = 0.3, freq_max = 1.2;  // Hz
  double noise_std = 0.0;                 // radians, per joint-frame
  std::uint64_t seed = 0;
  Representation repr = Representation::AngleAxis;

  void validate() const;
};

/// Sequence s draws from an independent stream derived from (seed, s), so a
/// subset regenerates identically regardless of batch size.
PoseSequence synth_sequence(const SynthConfig& config, std::size_t index);
std::vector<PoseSequence> synth_generate(const SynthConfig& config);

/// Sorted relative paths of the clips in a dataset directory: manifest.txt
/// (one path per line, '#' comments) when present, otherwise every *.motn.
std::vector<std::string> list_dataset(const std::string& dir);
void write_manifest(const std::string& dir, std::span<const std::string> names);

}  // namespace motion
