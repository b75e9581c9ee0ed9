#include "motion/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "motion/rotmath.hpp"
#include "motion/util.hpp"

namespace motion {

namespace {

/// Local rotation matrices for one frame. Matrix blocks are projected to
/// SO(3) and quaternions normalized, identically for predictions and targets,
/// so exact equality still maps to zero error.
std::vector<Mat3> local_rotations(const PoseSequence& seq, std::size_t frame) {
  std::vector<Mat3> out(seq.joints);
  const auto& row = seq.frames[frame];
  for (std::size_t k = 0; k < seq.joints; ++k) {
    Mat3 r = joint_rotation(row, k, seq.repr);
    if (seq.repr == Representation::RotationMatrix) r = project_to_so3(r);
    out[k] = r;
  }
  return out;
}

std::vector<Mat3> globals_of(const SkeletonSpec& skel, const std::vector<Mat3>& locals) {
  std::vector<Mat3> g(locals.size());
  for (std::size_t k = 0; k < locals.size(); ++k) {
    g[k] = skel.parents[k] < 0
               ? locals[k]
               : g[static_cast<std::size_t>(skel.parents[k])] * locals[k];
  }
  return g;
}

void check_pairs(std::span<const EvalPair> pairs, std::size_t t) {
  if (pairs.empty()) throw std::invalid_argument("metric: no evaluation pairs");
  if (t == 0) throw std::invalid_argument("metric: frame index is 1-based");
  for (const auto& p : pairs) {
    p.validate();
    if (t > p.horizon) {
      throw std::invalid_argument("metric: frame " + std::to_string(t) +
                                  " beyond horizon " + std::to_string(p.horizon));
    }
  }
}

void check_skeleton(std::span<const EvalPair> pairs, const SkeletonSpec& skel,
                    bool need_normalized) {
  skel.validate();
  if (need_normalized &&
      std::abs(skel.offsets[skel.unit_bone].norm() - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "metric: skeleton bones are not normalized; apply normalize_bones first");
  }
  for (const auto& p : pairs) {
    if (p.pred.joints != skel.joints()) {
      throw std::invalid_argument("metric: sequence joints do not match the skeleton");
    }
  }
}

/// Shared accumulation: per-pair at-or-until value, then a deterministic
/// pairwise-summed mean over pairs.
template <typename FrameValue>
double reduce_pairs(std::span<const EvalPair> pairs, std::size_t t, Accumulate mode,
                    FrameValue&& frame_value) {
  std::vector<double> per_pair;
  per_pair.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (mode == Accumulate::At) {
      per_pair.push_back(frame_value(p, t - 1));
    } else {
      double acc = 0.0;
      for (std::size_t f = 1; f <= t; ++f) acc += frame_value(p, f - 1);
      per_pair.push_back(acc);
    }
  }
  return pairwise_sum(per_pair) / static_cast<double>(per_pair.size());
}

/// Per-joint distances between predicted and target joint positions.
std::vector<double> frame_distances(const EvalPair& p, const SkeletonSpec& skel,
                                    std::size_t f) {
  const auto gp = globals_of(skel, local_rotations(p.pred, f));
  const auto gt = globals_of(skel, local_rotations(p.target, f));
  const auto pp = joint_positions(skel, gp);
  const auto pt = joint_positions(skel, gt);
  std::vector<double> d(pp.size());
  for (std::size_t k = 0; k < pp.size(); ++k) d[k] = (pp[k] - pt[k]).norm();
  return d;
}

}  // namespace

Accumulate accumulate_from_name(const std::string& name) {
  if (name == "at") return Accumulate::At;
  if (name == "until") return Accumulate::Until;
  throw std::invalid_argument("unknown accumulation mode '" + name + "'");
}

const char* accumulate_name(Accumulate mode) {
  return mode == Accumulate::At ? "at" : "until";
}

void EvalPair::validate() const {
  pred.validate();
  target.validate();
  if (pred.repr != target.repr || pred.joints != target.joints) {
    throw std::invalid_argument("eval pair: representation or joint count differs");
  }
  if (pred.fps != target.fps) {
    throw std::invalid_argument("eval pair: fps differs");
  }
  if (horizon == 0) throw std::invalid_argument("eval pair: horizon must be positive");
  if (pred.frames.size() < horizon || target.frames.size() < horizon) {
    throw std::invalid_argument("eval pair: sequences shorter than the horizon");
  }
}

std::size_t ms_to_frames(double ms, double fps) {
  if (ms < 0.0 || !(fps > 0.0)) {
    throw std::invalid_argument("ms_to_frames: needs ms >= 0 and fps > 0");
  }
  return static_cast<std::size_t>(std::floor(ms * fps / 1000.0 + 0.5));
}

std::vector<double> default_pck_grid() {
  std::vector<double> grid(21);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = 0.4 * static_cast<double>(i) / 20.0;
  }
  return grid;
}

double euler_metric(std::span<const EvalPair> pairs, std::size_t t, Accumulate mode,
                    bool exclude_root) {
  check_pairs(pairs, t);
  return reduce_pairs(pairs, t, mode, [exclude_root](const EvalPair& p, std::size_t f) {
    const auto lp = local_rotations(p.pred, f);
    const auto lt = local_rotations(p.target, f);
    double acc = 0.0;
    for (std::size_t k = exclude_root ? 1 : 0; k < lp.size(); ++k) {
      const Vec3 ep = rotmat_to_euler_zyx(lp[k]);
      const Vec3 et = rotmat_to_euler_zyx(lt[k]);
      const Vec3 d = ep - et;
      acc += d.dot(d);
    }
    return std::sqrt(acc);
  });
}

double joint_angle_metric(std::span<const EvalPair> pairs, const SkeletonSpec& skel,
                          std::size_t t, Accumulate mode) {
  check_pairs(pairs, t);
  check_skeleton(pairs, skel, false);
  return reduce_pairs(pairs, t, mode, [&skel](const EvalPair& p, std::size_t f) {
    const auto gp = globals_of(skel, local_rotations(p.pred, f));
    const auto gt = globals_of(skel, local_rotations(p.target, f));
    double acc = 0.0;
    for (std::size_t k = 0; k < gp.size(); ++k) {
      acc += rotation_angle(gp[k] * gt[k].transpose());
    }
    return acc / static_cast<double>(gp.size());
  });
}

double positional_metric(std::span<const EvalPair> pairs, const SkeletonSpec& skel,
                         std::size_t t, Accumulate mode) {
  check_pairs(pairs, t);
  check_skeleton(pairs, skel, true);
  return reduce_pairs(pairs, t, mode, [&skel](const EvalPair& p, std::size_t f) {
    const auto d = frame_distances(p, skel, f);
    return pairwise_sum(d) / static_cast<double>(d.size());
  });
}

double pck(std::span<const EvalPair> pairs, const SkeletonSpec& skel, std::size_t t,
           double rho) {
  if (rho < 0.0) throw std::invalid_argument("pck: threshold must be non-negative");
  check_pairs(pairs, t);
  check_skeleton(pairs, skel, true);
  std::vector<double> per_pair;
  per_pair.reserve(pairs.size());
  for (const auto& p : pairs) {
    double mean_frames = 0.0;
    for (std::size_t f = 1; f <= t; ++f) {
      const auto d = frame_distances(p, skel, f - 1);
      std::size_t inside = 0;
      for (double v : d) inside += v <= rho ? 1 : 0;
      mean_frames += static_cast<double>(inside) / static_cast<double>(d.size());
    }
    per_pair.push_back(mean_frames / static_cast<double>(t));
  }
  return pairwise_sum(per_pair) / static_cast<double>(per_pair.size());
}

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.size() < 2) throw std::invalid_argument("pck auc: need at least 2 thresholds");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid[i] < grid[i + 1])) {
      throw std::invalid_argument("pck auc: thresholds must be strictly ascending");
    }
  }
  if (grid.front() < 0.0) throw std::invalid_argument("pck auc: negative threshold");
}

/// Coverage over the whole grid with distances computed once per frame.
std::vector<double> pck_values(std::span<const EvalPair> pairs, const SkeletonSpec& skel,
                               std::size_t t, std::span<const double> grid) {
  std::vector<double> values(grid.size(), 0.0);
  std::vector<std::vector<double>> per_pair(grid.size());
  for (const auto& p : pairs) {
    std::vector<double> mean_frames(grid.size(), 0.0);
    for (std::size_t f = 1; f <= t; ++f) {
      const auto d = frame_distances(p, skel, f - 1);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        std::size_t inside = 0;
        for (double v : d) inside += v <= grid[g] ? 1 : 0;
        mean_frames[g] += static_cast<double>(inside) / static_cast<double>(d.size());
      }
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      per_pair[g].push_back(mean_frames[g] / static_cast<double>(t));
    }
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    values[g] = pairwise_sum(per_pair[g]) / static_cast<double>(per_pair[g].size());
  }
  return values;
}

double trapezoid_auc(std::span<const double> grid, std::span<const double> values) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    area += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
  }
  return area / (grid.back() - grid.front());
}

}  // namespace

double pck_auc(std::span<const EvalPair> pairs, const SkeletonSpec& skel, std::size_t t,
               std::span<const double> grid) {
  check_grid(grid);
  check_pairs(pairs, t);
  check_skeleton(pairs, skel, true);
  const auto values = pck_values(pairs, skel, t, grid);
  return trapezoid_auc(grid, values);
}

MetricReport build_report(std::span<const EvalPair> pairs, const SkeletonSpec& skel,
                          double fps, std::span<const double> horizons_ms,
                          Accumulate mode, std::span<const double> grid) {
  const std::vector<double> default_grid = default_pck_grid();
  if (grid.empty()) grid = default_grid;
  check_grid(grid);
  if (horizons_ms.empty()) throw std::invalid_argument("report: no horizons");

  MetricReport report;
  report.fps = fps;
  report.mode = mode;
  for (const double ms : horizons_ms) {
    const std::size_t frame = ms_to_frames(ms, fps);
    if (frame == 0) {
      throw std::invalid_argument("report: horizon " + std::to_string(ms) +
                                  " ms rounds to frame 0");
    }
    report.horizons_ms.push_back(ms);
    report.frames.push_back(frame);
    report.euler.push_back(euler_metric(pairs, frame, mode));
    report.joint_angle.push_back(joint_angle_metric(pairs, skel, frame, mode));
    report.positional.push_back(positional_metric(pairs, skel, frame, mode));

    PckCurve curve;
    curve.horizon_ms = ms;
    curve.frame = frame;
    curve.thresholds.assign(grid.begin(), grid.end());
    curve.values = pck_values(pairs, skel, frame, grid);
    report.pck_auc.push_back(trapezoid_auc(grid, curve.values));
    report.curves.push_back(std::move(curve));
  }
  return report;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_csv(const MetricReport& report,
                       const std::map<std::string, std::string>& meta) {
  std::string out;
  out += "# fps=" + fmt_double(report.fps) + "\n";
  out += "# mode=" + std::string(accumulate_name(report.mode)) + "\n";
  if (!report.curves.empty()) {
    out += "# pck_grid=";
    const auto& grid = report.curves.front().thresholds;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (i) out += ",";
      out += fmt_double(grid[i]);
    }
    out += "\n";
  }
  for (const auto& [key, value] : meta) {
    out += "# " + key + "=" + value + "\n";
  }
  out += "metric,horizon_ms,frame,mode,value\n";
  const auto row = [&](const char* name, std::size_t h, double value, const char* mode) {
    out += std::string(name) + "," + fmt_double(report.horizons_ms[h]) + "," +
           std::to_string(report.frames[h]) + "," + mode + "," + fmt_double(value) + "\n";
  };
  const char* mode = accumulate_name(report.mode);
  for (std::size_t h = 0; h < report.horizons_ms.size(); ++h) {
    row("euler", h, report.euler[h], mode);
    row("joint_angle", h, report.joint_angle[h], mode);
    row("positional", h, report.positional[h], mode);
    // Coverage always averages frames 1..t.
    row("pck_auc", h, report.pck_auc[h], "until");
  }
  return out;
}

std::string pck_curves_csv(const MetricReport& report) {
  std::string out = "horizon_ms,frame,threshold,value\n";
  for (const auto& curve : report.curves) {
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
      out += fmt_double(curve.horizon_ms) + "," + std::to_string(curve.frame) + "," +
             fmt_double(curve.thresholds[i]) + "," + fmt_double(curve.values[i]) + "\n";
    }
  }
  return out;
}

}  // namespace motion
