#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "motion/rotmath.hpp"

namespace motion {

/// On-disk / in-memory joint rotation encodings. Enumerator values match the
/// motion-file header byte.
enum class Representation : std::uint8_t {
  AngleAxis = 0,
  Quaternion = 1,
  RotationMatrix = 2,
};

/// Per-joint component count: 3, 4 or 9.
std::size_t rep_size(Representation rep);

const char* rep_name(Representation rep);
Representation rep_from_name(const std::string& name);

/// A motion clip: frames-by-(joints * rep_size) doubles, row per frame.
struct PoseSequence {
  Representation repr = Representation::AngleAxis;
  std::size_t joints = 0;
  double fps = 0.0;
  std::vector<std::vector<double>> frames;

  std::size_t frame_size() const { return joints * rep_size(repr); }

  /// Throws std::invalid_argument on inconsistent frame widths, joints == 0
  /// or fps <= 0.
  void validate() const;
};

/// Reads joint k of a frame as a rotation matrix. Quaternions are
/// renormalized, matrices taken verbatim (callers wanting a guaranteed
/// rotation should canonicalize first).
Mat3 joint_rotation(std::span<const double> frame, std::size_t k, Representation rep);

void set_joint_rotation(std::span<double> frame, std::size_t k, Representation rep,
                        const Mat3& r);

/// Converts one frame between representations; round-trips through rotation
/// matrices so every path shares the same canonicalization.
std::vector<double> convert_frame(std::span<const double> frame, std::size_t joints,
                                  Representation from, Representation to);

PoseSequence convert_sequence(const PoseSequence& seq, Representation to);

/// Maps each joint onto a valid rotation in place: matrices are projected to
/// SO(3), quaternions normalized onto the canonical hemisphere, angle-axis
/// left untouched. Applied identically to predictions and references before
/// any metric so equal inputs stay exactly equal.
void canonicalize_frame(std::span<double> frame, std::size_t joints, Representation rep);

}  // namespace motion
