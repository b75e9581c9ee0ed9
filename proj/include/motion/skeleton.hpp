#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "motion/pose.hpp"
#include "motion/rotmath.hpp"

namespace motion {

class SkeletonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Joint tree with rest-pose offsets. Storage order is file order, which the
/// parser guarantees to be topological (parents precede children).
struct SkeletonSpec {
  std::vector<std::string> names;
  std::vector<std::ptrdiff_t> parents;  // -1 for the root
  std::vector<Vec3> offsets;
  std::size_t unit_bone = 0;  // index of the bone defining unit length

  std::size_t joints() const { return names.size(); }

  /// Children lists in storage order.
  std::vector<std::vector<std::size_t>> children() const;

  std::size_t index_of(const std::string& name) const;

  /// FNV-1a over a canonical text serialization; identifies a skeleton in
  /// checkpoints and reports.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  void validate() const;
};

/// Text format, one joint per line:
///   name  parent_name|root  off_x off_y off_z  [unit]
/// '#' starts a comment; blank lines are skipped. Exactly one root, exactly
/// one unit marker, parents must be declared before children. Errors carry
/// the 1-based line number.
SkeletonSpec parse_skeleton(const std::string& text);
SkeletonSpec load_skeleton(const std::string& path);

/// Scales all offsets so the unit bone has length exactly 1.
SkeletonSpec normalize_bones(const SkeletonSpec& skel);

/// Accumulated rotations root-to-leaf: G(k) = G(parent(k)) * L(k).
std::vector<Mat3> global_rotations(const SkeletonSpec& skel,
                                   std::span<const double> frame, Representation rep);

/// Joint positions for precomputed globals:
/// p(k) = p(parent(k)) + G(parent(k)) * offset(k), p(root) = offset(root).
std::vector<Vec3> joint_positions(const SkeletonSpec& skel, std::span<const Mat3> globals);

std::vector<Vec3> joint_positions(const SkeletonSpec& skel, std::span<const double> frame,
                                  Representation rep);

}  // namespace motion
