#include "motion/rotmath.hpp"

#include <algorithm>
#include <stdexcept>

namespace motion {

namespace {

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

/// Wraps into (-pi, pi].
double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

}  // namespace

Mat3 aa_to_rotmat(const Vec3& aa) {
  const double theta = aa.norm();
  Mat3 k;  // skew(aa)
  k.m = {0, -aa.z, aa.y, aa.z, 0, -aa.x, -aa.y, aa.x, 0};
  Mat3 r = Mat3::identity();
  if (theta < 1e-12) {
    for (std::size_t i = 0; i < 9; ++i) r.m[i] += k.m[i];
    return r;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  const Mat3 kk = k * k;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] += a * k.m[i] + b * kk.m[i];
  return r;
}

Vec3 rotmat_to_aa(const Mat3& r) {
  const double c = clamp1((r.trace() - 1.0) * 0.5);
  const double theta = std::acos(c);
  // vee(R - R^T) = 2 sin(theta) * axis
  const Vec3 skew{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  if (theta < 1e-4) {
    // R ~ I + skew(aa): half the skew part is the vector itself (third-order
    // accurate, and exact at identity).
    return skew * 0.5;
  }
  if (theta > kPi - 1e-3) {
    // The trace cannot resolve theta this close to pi (acos error grows as
    // 1/sin). Axis: R_dd = cos + (1-cos) a_d^2 solved at the dominant
    // diagonal, off-axis components from the symmetric part; both divide by
    // 1 - cos ~ 2, so they stay well conditioned. Magnitude: sin(theta) =
    // |vee(R - R^T)| / 2 read from the skew part, inverted around pi.
    const double one_minus_c = 1.0 - c;
    std::size_t d = 0;
    if (r(1, 1) > r(d, d)) d = 1;
    if (r(2, 2) > r(d, d)) d = 2;
    Vec3 axis;
    axis[d] = std::sqrt(std::max(0.0, (r(d, d) - c) / one_minus_c));
    const double denom = 2.0 * one_minus_c * axis[d];
    axis[(d + 1) % 3] = (r(d, (d + 1) % 3) + r((d + 1) % 3, d)) / denom;
    axis[(d + 2) % 3] = (r(d, (d + 2) % 3) + r((d + 2) % 3, d)) / denom;
    const double n = axis.norm();
    axis = axis * (1.0 / n);
    // The diagonal loses the axis sign; pick the half-space that agrees with
    // the residual skew part when it is meaningful.
    if (skew.dot(axis) < 0.0) axis = axis * -1.0;
    const double refined = kPi - std::asin(clamp1(skew.norm() * 0.5));
    return axis * refined;
  }
  const double scale = theta / (2.0 * std::sin(theta));
  return skew * scale;
}

Quat rotmat_to_quat(const Mat3& r) {
  Quat q;
  const double tr = r.trace();
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (r(2, 1) - r(1, 2)) / s;
    q.y = (r(0, 2) - r(2, 0)) / s;
    q.z = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q.w = (r(2, 1) - r(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (r(0, 1) + r(1, 0)) / s;
    q.z = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q.w = (r(0, 2) - r(2, 0)) / s;
    q.x = (r(0, 1) + r(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q.w = (r(1, 0) - r(0, 1)) / s;
    q.x = (r(0, 2) + r(2, 0)) / s;
    q.y = (r(1, 2) + r(2, 1)) / s;
    q.z = 0.25 * s;
  }
  const double n = q.norm();
  q.w /= n;
  q.x /= n;
  q.y /= n;
  q.z /= n;
  return quat_canonical(q);
}

Quat quat_canonical(const Quat& q) {
  bool flip = q.w < 0.0;
  if (q.w == 0.0) {
    if (q.x != 0.0)
      flip = q.x < 0.0;
    else if (q.y != 0.0)
      flip = q.y < 0.0;
    else
      flip = q.z < 0.0;
  }
  return flip ? Quat{-q.w, -q.x, -q.y, -q.z} : q;
}

Mat3 quat_to_rotmat(const Quat& q) {
  const double n = q.norm();
  if (std::abs(n - 1.0) > 1e-6) {
    throw std::invalid_argument("quat_to_rotmat: quaternion norm deviates from 1 by more than 1e-6");
  }
  const double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;
  Mat3 r;
  r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
         2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
  return r;
}

Mat3 euler_zyx_to_rotmat(const Vec3& e) {
  const double ca = std::cos(e.x), sa = std::sin(e.x);
  const double cb = std::cos(e.y), sb = std::sin(e.y);
  const double cc = std::cos(e.z), sc = std::sin(e.z);
  Mat3 r;
  r.m = {cc * cb, cc * sb * sa - sc * ca, cc * sb * ca + sc * sa,
         sc * cb, sc * sb * sa + cc * ca, sc * sb * ca - cc * sa,
         -sb,     cb * sa,                cb * ca};
  return r;
}

Vec3 rotmat_to_euler_zyx(const Mat3& r) {
  const double r31 = clamp1(r(2, 0));
  if (std::abs(r31) >= 1.0 - 1e-9) {
    // Gimbal lock: only ax -+ az is observable; fix ax = 0. With ax = 0 the
    // top-right block reduces to R12 = -sin(az), R22 = cos(az).
    Vec3 e;
    e.x = 0.0;
    e.y = r31 < 0.0 ? kPi / 2.0 : -kPi / 2.0;
    e.z = wrap_angle(std::atan2(-r(0, 1), r(1, 1)));
    return e;
  }
  const double b1 = std::asin(-r31);
  const double b2 = wrap_angle(kPi - b1);
  Vec3 best;
  double best_cost = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double b = (i == 0) ? b1 : b2;
    const double cb = std::cos(b);
    Vec3 e{wrap_angle(std::atan2(r(2, 1) / cb, r(2, 2) / cb)), wrap_angle(b),
           wrap_angle(std::atan2(r(1, 0) / cb, r(0, 0) / cb))};
    const double cost = std::abs(e.x) + std::abs(e.y) + std::abs(e.z);
    if (i == 0 || cost < best_cost) {
      best = e;
      best_cost = cost;
    }
  }
  return best;
}

Mat3 project_to_so3(const Mat3& m) {
  Vec3 c[3];
  for (std::size_t j = 0; j < 3; ++j) c[j] = {m(0, j), m(1, j), m(2, j)};

  Vec3 u[3];
  for (std::size_t j = 0; j < 3; ++j) {
    Vec3 v = c[j];
    for (std::size_t k = 0; k < j; ++k) v = v - u[k] * u[k].dot(c[j]);
    const double n = v.norm();
    if (n < 1e-8) {
      throw std::invalid_argument("project_to_so3: rank-deficient input");
    }
    u[j] = v * (1.0 / n);
  }

  Mat3 r;
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) r(i, j) = u[j][i];
  if (r.det() < 0.0) {
    for (std::size_t i = 0; i < 3; ++i) r(i, 2) = -r(i, 2);
  }
  return r;
}

double rotation_angle(const Mat3& r) {
  // Through the quaternion instead of acos((trace-1)/2): near zero the trace
  // formula turns O(eps) numeric asymmetry into an O(sqrt(eps)) angle, which
  // would leave identical rotations with a phantom error after a chain of
  // matrix products.
  const Quat q = rotmat_to_quat(r);
  const double n = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  return 2.0 * std::atan2(n, std::abs(q.w));
}

}  // namespace motion
