#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace motion {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
};

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

  double& operator()(std::size_t r, std::size_t c) { return m[3 * r + c]; }
  double operator()(std::size_t r, std::size_t c) const { return m[3 * r + c]; }

  Mat3 operator*(const Mat3& o) const {
    Mat3 out;
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c)
        out(r, c) = (*this)(r, 0) * o(0, c) + (*this)(r, 1) * o(1, c) +
                    (*this)(r, 2) * o(2, c);
    return out;
  }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 transpose() const {
    return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }

  double trace() const { return m[0] + m[4] + m[8]; }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }
};

/// Scalar-first unit quaternion.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
};

/// Exponential map: angle-axis vector (direction = axis, magnitude = angle,
/// radians) to rotation matrix via Rodrigues. Angles below 1e-12 use the
/// first-order expansion so the zero vector maps exactly to identity.
Mat3 aa_to_rotmat(const Vec3& aa);

/// Log map, canonical magnitude in [0, pi]. Near pi the axis comes from the
/// dominant diagonal of (R + I)/2 with signs recovered from the off-diagonal
/// sums; the tiny-angle branch reads the skew part directly.
Vec3 rotmat_to_aa(const Mat3& r);

/// Largest-pivot extraction, normalized, canonical hemisphere (w >= 0; if
/// w == 0 the first nonzero of x, y, z is made positive).
Quat rotmat_to_quat(const Mat3& r);

/// Requires |norm - 1| <= 1e-6 (throws std::invalid_argument otherwise);
/// renormalizes internally before forming the matrix.
Mat3 quat_to_rotmat(const Quat& q);

/// Flips to the w >= 0 hemisphere (w == 0: first nonzero component positive).
Quat quat_canonical(const Quat& q);

/// Intrinsic z-y-x decomposition of R = Rz(az) * Ry(ay) * Rx(ax), returned as
/// (ax, ay, az), each in (-pi, pi]. Away from gimbal lock both candidate
/// solutions are formed and the one with the smaller |ax|+|ay|+|az| wins
/// (ties keep the principal asin branch). At |R31| ~ 1 only ax + az (or their
/// difference) is determined; the split fixes ax = 0.
Vec3 rotmat_to_euler_zyx(const Mat3& r);

/// Composes Rz(e.z) * Ry(e.y) * Rx(e.x).
Mat3 euler_zyx_to_rotmat(const Vec3& e);

/// Nearest rotation by Gram-Schmidt on the columns plus a determinant sign
/// fix on the third column. Throws std::invalid_argument when a column (or
/// its rejection) has norm below 1e-8.
Mat3 project_to_so3(const Mat3& m);

/// Geodesic angle in [0, pi], read through the quaternion so angles near
/// zero keep full precision and equal rotations score exactly zero.
double rotation_angle(const Mat3& r);

}  // namespace motion
