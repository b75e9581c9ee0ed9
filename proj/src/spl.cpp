#include "motion/spl.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "motion/util.hpp"

namespace motion {

Hierarchy hierarchy_from_name(const std::string& name) {
  if (name == "kinematic") return Hierarchy::Kinematic;
  if (name == "independent") return Hierarchy::Independent;
  if (name == "reverse") return Hierarchy::Reverse;
  if (name == "random") return Hierarchy::Random;
  throw std::invalid_argument("unknown hierarchy '" + name +
                              "' (expected kinematic, independent, reverse or random)");
}

const char* hierarchy_name(Hierarchy h) {
  switch (h) {
    case Hierarchy::Kinematic: return "kinematic";
    case Hierarchy::Independent: return "independent";
    case Hierarchy::Reverse: return "reverse";
    case Hierarchy::Random: return "random";
  }
  throw std::invalid_argument("hierarchy_name: unknown value");
}

Feeding feeding_from_name(const std::string& name) {
  if (name == "sparse") return Feeding::Sparse;
  if (name == "dense") return Feeding::Dense;
  throw std::invalid_argument("unknown feeding '" + name + "' (expected sparse or dense)");
}

const char* feeding_name(Feeding f) {
  return f == Feeding::Sparse ? "sparse" : "dense";
}

SplLayer::SplLayer(const SkeletonSpec& skel, const SplConfig& config,
                   grad::ParameterStore& store, std::string prefix)
    : config_(config), prefix_(std::move(prefix)) {
  skel.validate();
  if (config_.hidden == 0) throw std::invalid_argument("spl: hidden width must be positive");
  if (config_.joint_size == 0) throw std::invalid_argument("spl: joint size must be positive");
  if (config_.context_dim == 0) throw std::invalid_argument("spl: context dim must be positive");

  const std::size_t k = skel.joints();
  order_.resize(k);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> sparse(k);

  switch (config_.hierarchy) {
    case Hierarchy::Kinematic:
      for (std::size_t j = 0; j < k; ++j) {
        if (skel.parents[j] >= 0) sparse[j] = {static_cast<std::size_t>(skel.parents[j])};
      }
      break;
    case Hierarchy::Independent:
      break;  // nothing fed; feeding mode has no effect
    case Hierarchy::Reverse:
      // Children predict first; each joint sees its original children.
      std::reverse(order_.begin(), order_.end());
      for (std::size_t j = 0; j < k; ++j) {
        if (skel.parents[j] >= 0) {
          sparse[static_cast<std::size_t>(skel.parents[j])].push_back(j);
        }
      }
      break;
    case Hierarchy::Random: {
      Rng rng(config_.random_seed);
      rng.shuffle(std::span<std::size_t>(order_));
      for (std::size_t i = 1; i < k; ++i) sparse[order_[i]] = {order_[i - 1]};
      break;
    }
  }

  // Position of each joint in the evaluation order, for feed sorting and the
  // causality invariant (every fed joint must already be evaluated).
  std::vector<std::size_t> pos(k);
  for (std::size_t i = 0; i < k; ++i) pos[order_[i]] = i;

  fed_.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<std::size_t> feed;
    if (config_.feeding == Feeding::Sparse || config_.hierarchy == Hierarchy::Independent) {
      feed = sparse[j];
    } else {
      // Transitive closure over the sparse feeds.
      std::vector<char> seen(k, 0);
      std::vector<std::size_t> stack = sparse[j];
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        if (seen[p]) continue;
        seen[p] = 1;
        for (std::size_t q : sparse[p]) stack.push_back(q);
      }
      for (std::size_t p = 0; p < k; ++p) {
        if (seen[p]) feed.push_back(p);
      }
    }
    std::sort(feed.begin(), feed.end(),
              [&pos](std::size_t a, std::size_t b) { return pos[a] < pos[b]; });
    for (std::size_t p : feed) {
      if (pos[p] >= pos[j]) {
        throw std::logic_error("spl: feed graph is not causal");
      }
    }
    fed_[j] = std::move(feed);
  }

  for (std::size_t j = 0; j < k; ++j) {
    const std::string jp = joint_prefix(j);
    store.ensure(jp + ".w1", {input_dim(j), config_.hidden}, grad::Init::Glorot);
    store.ensure(jp + ".b1", {config_.hidden}, grad::Init::Zero);
    store.ensure(jp + ".w2", {config_.hidden, config_.joint_size}, grad::Init::Glorot);
    store.ensure(jp + ".b2", {config_.joint_size}, grad::Init::Zero);
  }
}

std::string SplLayer::joint_prefix(std::size_t k) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, ".j%02zu", k);
  return prefix_ + buf;
}

std::size_t SplLayer::input_dim(std::size_t k) const {
  return config_.context_dim + config_.joint_size * fed_[k].size();
}

grad::Var SplLayer::forward(grad::Tape& tape, grad::ParameterStore& store,
                            grad::Var context) const {
  const grad::Tensor& ctx = tape.value(context);
  if (ctx.rank() != 2 || ctx.dim(1) != config_.context_dim) {
    throw std::invalid_argument("spl forward: context must be [batch x " +
                                std::to_string(config_.context_dim) + "], got " +
                                ctx.shape_str());
  }

  std::vector<grad::Var> preds(joints());
  for (std::size_t j : order_) {
    grad::Var input = context;
    if (!fed_[j].empty()) {
      std::vector<grad::Var> parts{context};
      for (std::size_t p : fed_[j]) parts.push_back(preds[p]);
      input = tape.concat(parts);
    }
    const std::string jp = joint_prefix(j);
    grad::Var hidden = tape.relu(
        tape.bias_add(tape.matmul(input, tape.param(store, jp + ".w1")),
                      tape.param(store, jp + ".b1")));
    preds[j] = tape.bias_add(tape.matmul(hidden, tape.param(store, jp + ".w2")),
                             tape.param(store, jp + ".b2"));
  }
  return tape.concat(preds);
}

double per_joint_loss(std::span<const std::vector<double>> pred_frames,
                      std::span<const std::vector<double>> target_frames,
                      std::size_t joints) {
  if (joints == 0) throw std::invalid_argument("per_joint_loss: joints must be positive");
  if (pred_frames.size() != target_frames.size()) {
    throw std::invalid_argument("per_joint_loss: frame counts differ");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < pred_frames.size(); ++t) {
    const auto& p = pred_frames[t];
    const auto& q = target_frames[t];
    if (p.size() != q.size() || p.size() % joints != 0) {
      throw std::invalid_argument("per_joint_loss: frame widths inconsistent at frame " +
                                  std::to_string(t));
    }
    const std::size_t m = p.size() / joints;
    for (std::size_t k = 0; k < joints; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = p[k * m + i] - q[k * m + i];
        s += d * d;
      }
      total += s;
    }
  }
  return total;
}

std::vector<double> residual_combine(std::span<const double> input,
                                     std::span<const double> delta) {
  if (input.size() != delta.size()) {
    throw std::invalid_argument("residual_combine: length mismatch");
  }
  std::vector<double> out(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] + delta[i];
  return out;
}

}  // namespace motion
