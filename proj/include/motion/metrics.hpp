#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "motion/pose.hpp"
#include "motion/skeleton.hpp"

namespace motion {

/// "at" evaluates a single frame, "until" accumulates frames 1..t. Distance
/// metrics sum in until mode; the joint-coverage metric averages instead.
enum class Accumulate { At, Until };

Accumulate accumulate_from_name(const std::string& name);
const char* accumulate_name(Accumulate mode);

/// One evaluation item: a predicted clip against its ground truth. Both
/// sequences carry at least `horizon` frames; frame t below is 1-based within
/// the prediction.
struct EvalPair {
  PoseSequence pred, target;
  std::size_t horizon = 0;

  void validate() const;
};

/// Joint-coverage fractions over a threshold grid at one horizon.
struct PckCurve {
  double horizon_ms = 0.0;
  std::size_t frame = 0;
  std::vector<double> thresholds, values;
};

/// All four metrics per horizon plus the coverage curves behind the AUC
/// column. Vectors are indexed by horizon.
struct MetricReport {
  double fps = 0.0;
  Accumulate mode = Accumulate::Until;
  std::vector<double> horizons_ms;
  std::vector<std::size_t> frames;
  std::vector<double> euler, joint_angle, positional, pck_auc;
  std::vector<PckCurve> curves;
};

/// round-half-up(ms * fps / 1000); rejects negative inputs.
std::size_t ms_to_frames(double ms, double fps);

/// 21 thresholds linearly spaced over [0, 0.4] normalized bone units.
std::vector<double> default_pck_grid();

/// Per frame: every local rotation becomes z-y-x Euler angles and the frame
/// error is the Euclidean norm over all 3K angle residuals. exclude_root
/// drops joint 0. Averaged over pairs.
double euler_metric(std::span<const EvalPair> pairs, std::size_t t, Accumulate mode,
                    bool exclude_root = false);

/// Per frame: unroll the kinematic chain, then average over joints the
/// rotation angle of predicted-global times transposed target-global.
double joint_angle_metric(std::span<const EvalPair> pairs, const SkeletonSpec& skel,
                          std::size_t t, Accumulate mode);

/// Per frame: forward kinematics on a bone-normalized skeleton, mean
/// per-joint Euclidean distance (root included).
double positional_metric(std::span<const EvalPair> pairs, const SkeletonSpec& skel,
                         std::size_t t, Accumulate mode);

/// Fraction of joints within distance rho, averaged over frames 1..t and
/// over pairs.
double pck(std::span<const EvalPair> pairs, const SkeletonSpec& skel, std::size_t t,
           double rho);

/// Trapezoidal integral of the coverage curve over an ascending threshold
/// grid, divided by the grid span.
double pck_auc(std::span<const EvalPair> pairs, const SkeletonSpec& skel, std::size_t t,
               std::span<const double> grid);

/// Evaluates all four metrics at each horizon. Horizons are converted with
/// ms_to_frames and must land in [1, P]. An empty grid means the default.
MetricReport build_report(std::span<const EvalPair> pairs, const SkeletonSpec& skel,
                          double fps, std::span<const double> horizons_ms,
                          Accumulate mode, std::span<const double> grid = {});

/// One row per (metric, horizon); meta entries become leading '#' lines.
std::string report_csv(const MetricReport& report,
                       const std::map<std::string, std::string>& meta = {});
std::string pck_curves_csv(const MetricReport& report);
/// Self-contained line plot of the coverage curves.
std::string pck_curves_svg(const MetricReport& report);

}  // namespace motion
