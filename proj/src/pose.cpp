#include "motion/pose.hpp"

namespace motion {

std::size_t rep_size(Representation rep) {
  switch (rep) {
    case Representation::AngleAxis: return 3;
    case Representation::Quaternion: return 4;
    case Representation::RotationMatrix: return 9;
  }
  throw std::invalid_argument("rep_size: unknown representation");
}

const char* rep_name(Representation rep) {
  switch (rep) {
    case Representation::AngleAxis: return "aa";
    case Representation::Quaternion: return "quat";
    case Representation::RotationMatrix: return "rotmat";
  }
  throw std::invalid_argument("rep_name: unknown representation");
}

Representation rep_from_name(const std::string& name) {
  if (name == "aa") return Representation::AngleAxis;
  if (name == "quat") return Representation::Quaternion;
  if (name == "rotmat") return Representation::RotationMatrix;
  throw std::invalid_argument("unknown representation '" + name +
                              "' (expected aa, quat or rotmat)");
}

void PoseSequence::validate() const {
  if (joints == 0) throw std::invalid_argument("pose sequence: joints must be positive");
  if (!(fps > 0.0)) throw std::invalid_argument("pose sequence: fps must be positive");
  const std::size_t width = frame_size();
  for (const auto& f : frames) {
    if (f.size() != width) {
      throw std::invalid_argument("pose sequence: frame width " + std::to_string(f.size()) +
                                  " does not match joints*rep = " + std::to_string(width));
    }
  }
}

Mat3 joint_rotation(std::span<const double> frame, std::size_t k, Representation rep) {
  const std::size_t m = rep_size(rep);
  const double* p = frame.data() + k * m;
  switch (rep) {
    case Representation::AngleAxis:
      return aa_to_rotmat({p[0], p[1], p[2]});
    case Representation::Quaternion: {
      Quat q{p[0], p[1], p[2], p[3]};
      const double n = q.norm();
      if (n < 1e-8) throw std::invalid_argument("joint_rotation: near-zero quaternion");
      return quat_to_rotmat({q.w / n, q.x / n, q.y / n, q.z / n});
    }
    case Representation::RotationMatrix: {
      Mat3 r;
      for (std::size_t i = 0; i < 9; ++i) r.m[i] = p[i];
      return r;
    }
  }
  throw std::invalid_argument("joint_rotation: unknown representation");
}

void set_joint_rotation(std::span<double> frame, std::size_t k, Representation rep,
                        const Mat3& r) {
  const std::size_t m = rep_size(rep);
  double* p = frame.data() + k * m;
  switch (rep) {
    case Representation::AngleAxis: {
      const Vec3 aa = rotmat_to_aa(r);
      p[0] = aa.x;
      p[1] = aa.y;
      p[2] = aa.z;
      return;
    }
    case Representation::Quaternion: {
      const Quat q = rotmat_to_quat(r);
      p[0] = q.w;
      p[1] = q.x;
      p[2] = q.y;
      p[3] = q.z;
      return;
    }
    case Representation::RotationMatrix:
      for (std::size_t i = 0; i < 9; ++i) p[i] = r.m[i];
      return;
  }
  throw std::invalid_argument("set_joint_rotation: unknown representation");
}

std::vector<double> convert_frame(std::span<const double> frame, std::size_t joints,
                                  Representation from, Representation to) {
  if (frame.size() != joints * rep_size(from)) {
    throw std::invalid_argument("convert_frame: frame width does not match joints*rep");
  }
  if (from == to) return {frame.begin(), frame.end()};
  std::vector<double> out(joints * rep_size(to));
  for (std::size_t k = 0; k < joints; ++k) {
    set_joint_rotation(out, k, to, joint_rotation(frame, k, from));
  }
  return out;
}

PoseSequence convert_sequence(const PoseSequence& seq, Representation to) {
  PoseSequence out;
  out.repr = to;
  out.joints = seq.joints;
  out.fps = seq.fps;
  out.frames.reserve(seq.frames.size());
  for (const auto& f : seq.frames) {
    out.frames.push_back(convert_frame(f, seq.joints, seq.repr, to));
  }
  return out;
}

void canonicalize_frame(std::span<double> frame, std::size_t joints, Representation rep) {
  switch (rep) {
    case Representation::AngleAxis:
      return;
    case Representation::Quaternion:
      for (std::size_t k = 0; k < joints; ++k) {
        double* p = frame.data() + 4 * k;
        Quat q{p[0], p[1], p[2], p[3]};
        const double n = q.norm();
        if (n < 1e-8) throw std::invalid_argument("canonicalize_frame: near-zero quaternion");
        q = quat_canonical({q.w / n, q.x / n, q.y / n, q.z / n});
        p[0] = q.w;
        p[1] = q.x;
        p[2] = q.y;
        p[3] = q.z;
      }
      return;
    case Representation::RotationMatrix:
      for (std::size_t k = 0; k < joints; ++k) {
        double* p = frame.data() + 9 * k;
        Mat3 m;
        for (std::size_t i = 0; i < 9; ++i) m.m[i] = p[i];
        const Mat3 r = project_to_so3(m);
        for (std::size_t i = 0; i < 9; ++i) p[i] = r.m[i];
      }
      return;
  }
  throw std::invalid_argument("canonicalize_frame: unknown representation");
}

}  // namespace motion
