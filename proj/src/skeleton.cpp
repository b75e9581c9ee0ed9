#include "motion/skeleton.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "motion/util.hpp"

namespace motion {

std::vector<std::vector<std::size_t>> SkeletonSpec::children() const {
  std::vector<std::vector<std::size_t>> out(joints());
  for (std::size_t k = 0; k < joints(); ++k) {
    if (parents[k] >= 0) out[static_cast<std::size_t>(parents[k])].push_back(k);
  }
  return out;
}

std::size_t SkeletonSpec::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return k;
  }
  throw SkeletonError("skeleton: unknown joint '" + name + "'");
}

std::uint64_t SkeletonSpec::hash() const {
  std::string blob;
  char buf[96];
  for (std::size_t k = 0; k < joints(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", offsets[k].x, offsets[k].y,
                  offsets[k].z);
    blob += names[k];
    blob += '|';
    blob += parents[k] < 0 ? "root" : names[static_cast<std::size_t>(parents[k])];
    blob += '|';
    blob += buf;
    if (k == unit_bone) blob += "|unit";
    blob += '\n';
  }
  return fnv1a64(blob);
}

std::string SkeletonSpec::hash_hex() const { return to_hex(hash()); }

void SkeletonSpec::validate() const {
  if (joints() == 0) throw SkeletonError("skeleton: empty");
  if (parents.size() != joints() || offsets.size() != joints()) {
    throw SkeletonError("skeleton: field lengths disagree");
  }
  std::size_t roots = 0;
  for (std::size_t k = 0; k < joints(); ++k) {
    if (parents[k] < 0) {
      ++roots;
    } else if (static_cast<std::size_t>(parents[k]) >= k) {
      throw SkeletonError("skeleton: joint '" + names[k] + "' precedes its parent");
    }
  }
  if (roots != 1) {
    throw SkeletonError("skeleton: expected exactly one root, found " +
                        std::to_string(roots));
  }
  if (unit_bone >= joints()) throw SkeletonError("skeleton: unit bone index out of range");
  if (offsets[unit_bone].norm() < 1e-12) {
    throw SkeletonError("skeleton: unit bone '" + names[unit_bone] + "' has zero length");
  }
}

SkeletonSpec parse_skeleton(const std::string& text) {
  SkeletonSpec skel;
  std::unordered_map<std::string, std::size_t> index;
  bool have_unit = false;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);

    std::istringstream ls(line);
    std::string name, parent;
    if (!(ls >> name)) continue;  // blank or comment-only line

    const std::string where = "skeleton line " + std::to_string(line_no) + ": ";
    double ox, oy, oz;
    if (!(ls >> parent >> ox >> oy >> oz)) {
      throw SkeletonError(where + "expected 'name parent off_x off_y off_z [unit]'");
    }
    std::string marker, extra;
    bool unit = false;
    if (ls >> marker) {
      if (marker != "unit") throw SkeletonError(where + "unexpected token '" + marker + "'");
      if (ls >> extra) throw SkeletonError(where + "trailing token '" + extra + "'");
      unit = true;
    }

    if (index.count(name)) throw SkeletonError(where + "duplicate joint '" + name + "'");

    std::ptrdiff_t parent_idx = -1;
    if (parent != "root") {
      auto it = index.find(parent);
      if (it == index.end()) {
        throw SkeletonError(where + "parent '" + parent +
                            "' not defined above (parents must precede children)");
      }
      parent_idx = static_cast<std::ptrdiff_t>(it->second);
    }

    index[name] = skel.names.size();
    skel.names.push_back(name);
    skel.parents.push_back(parent_idx);
    skel.offsets.push_back({ox, oy, oz});
    if (unit) {
      if (have_unit) throw SkeletonError(where + "second 'unit' marker");
      have_unit = true;
      skel.unit_bone = skel.names.size() - 1;
    }
  }

  if (skel.joints() == 0) throw SkeletonError("skeleton: no joints defined");
  if (!have_unit) throw SkeletonError("skeleton: no bone carries the 'unit' marker");
  skel.validate();
  return skel;
}

SkeletonSpec load_skeleton(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SkeletonError("skeleton: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_skeleton(ss.str());
}

SkeletonSpec normalize_bones(const SkeletonSpec& skel) {
  skel.validate();
  SkeletonSpec out = skel;
  const double scale = 1.0 / skel.offsets[skel.unit_bone].norm();
  for (auto& off : out.offsets) off = off * scale;
  return out;
}

std::vector<Mat3> global_rotations(const SkeletonSpec& skel,
                                   std::span<const double> frame, Representation rep) {
  if (frame.size() != skel.joints() * rep_size(rep)) {
    throw std::invalid_argument("global_rotations: frame width does not match skeleton");
  }
  std::vector<Mat3> globals(skel.joints());
  for (std::size_t k = 0; k < skel.joints(); ++k) {
    const Mat3 local = joint_rotation(frame, k, rep);
    globals[k] = skel.parents[k] < 0
                     ? local
                     : globals[static_cast<std::size_t>(skel.parents[k])] * local;
  }
  return globals;
}

std::vector<Vec3> joint_positions(const SkeletonSpec& skel, std::span<const Mat3> globals) {
  if (globals.size() != skel.joints()) {
    throw std::invalid_argument("joint_positions: globals size does not match skeleton");
  }
  std::vector<Vec3> pos(skel.joints());
  for (std::size_t k = 0; k < skel.joints(); ++k) {
    if (skel.parents[k] < 0) {
      pos[k] = skel.offsets[k];
    } else {
      const auto p = static_cast<std::size_t>(skel.parents[k]);
      pos[k] = pos[p] + globals[p] * skel.offsets[k];
    }
  }
  return pos;
}

std::vector<Vec3> joint_positions(const SkeletonSpec& skel, std::span<const double> frame,
                                  Representation rep) {
  return joint_positions(skel, global_rotations(skel, frame, rep));
}

}  // namespace motion
