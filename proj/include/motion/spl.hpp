#pragma once

#include <span>
#include <string>
#include <vector>

#include "motion/grad/layers.hpp"
#include "motion/skeleton.hpp"

namespace motion {

/// Which joint depends on which when predictions are produced one joint at a
/// time.
enum class Hierarchy { Kinematic, Independent, Reverse, Random };

Hierarchy hierarchy_from_name(const std::string& name);
const char* hierarchy_name(Hierarchy h);

/// Sparse feeds only the direct predecessors, dense feeds every transitive
/// predecessor in the chosen hierarchy.
enum class Feeding { Sparse, Dense };

Feeding feeding_from_name(const std::string& name);
const char* feeding_name(Feeding f);

struct SplConfig {
  Hierarchy hierarchy = Hierarchy::Kinematic;
  Feeding feeding = Feeding::Sparse;
  std::size_t hidden = 64;      // per-joint hidden width
  std::size_t joint_size = 9;   // components per joint (M)
  std::size_t context_dim = 0;  // width of the shared context vector (D)
  std::uint64_t random_seed = 0;  // permutation seed for Hierarchy::Random
};

/// Structured output head: one small two-layer network per joint,
/// Linear(hidden)-ReLU-Linear(joint_size), evaluated in hierarchy order.
/// Every joint sees the shared context; joints with predecessors additionally
/// see those predecessors' fresh predictions, concatenated in evaluation
/// order. The assembled output keeps skeleton storage order.
class SplLayer {
 public:
  SplLayer(const SkeletonSpec& skel, const SplConfig& config,
           grad::ParameterStore& store, std::string prefix = "spl");

  grad::Var forward(grad::Tape& tape, grad::ParameterStore& store,
                    grad::Var context) const;

  std::size_t joints() const { return fed_.size(); }
  std::size_t output_dim() const { return joints() * config_.joint_size; }
  /// context_dim + joint_size * |fed(k)|.
  std::size_t input_dim(std::size_t k) const;
  const std::vector<std::size_t>& fed(std::size_t k) const { return fed_[k]; }
  const std::vector<std::size_t>& evaluation_order() const { return order_; }
  const SplConfig& config() const { return config_; }

 private:
  std::string joint_prefix(std::size_t k) const;

  SplConfig config_;
  std::string prefix_;
  std::vector<std::size_t> order_;            // evaluation order, storage indices
  std::vector<std::vector<std::size_t>> fed_;  // per joint, in evaluation order
};

/// Pose error summed joint-wise: sum over frames and joints of the squared
/// Euclidean distance between the per-joint component blocks. Equals
/// frames * width times the mean squared error of the flattened residual.
double per_joint_loss(std::span<const std::vector<double>> pred_frames,
                      std::span<const std::vector<double>> target_frames,
                      std::size_t joints);

/// Elementwise input + delta; lengths must match.
std::vector<double> residual_combine(std::span<const double> input,
                                     std::span<const double> delta);

}  // namespace motion
