#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "motion/grad/tensor.hpp"
#include "motion/util.hpp"

namespace motion::grad {

enum class Init { Zero, Glorot };

/// Named trainable tensors plus their optimizer state. Initial values are
/// derived from (store seed, parameter name), so registration order never
/// changes what a parameter starts as.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed) : seed_(seed) {}

  /// Glorot draws uniform +-sqrt(6 / (fan_in + fan_out)) and requires rank 2;
  /// biases and other shapes start at zero.
  Tensor& create(const std::string& name, std::vector<std::size_t> shape, Init init);
  /// create() if absent; an existing parameter keeps its value (so models can
  /// be rebuilt on top of a checkpoint-loaded store) but must match in shape.
  Tensor& ensure(const std::string& name, std::vector<std::size_t> shape, Init init);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<std::string>& names() const { return names_; }

  Tensor& moment1(const std::string& name) { return m1_[find(name)]; }
  Tensor& moment2(const std::string& name) { return m2_[find(name)]; }
  const Tensor& moment1(const std::string& name) const { return m1_[find(name)]; }
  const Tensor& moment2(const std::string& name) const { return m2_[find(name)]; }

  std::size_t step() const { return step_; }
  void set_step(std::size_t s) { step_ = s; }
  std::uint64_t seed() const { return seed_; }

  std::size_t total_params() const;

  std::vector<Tensor> snapshot_values() const { return values_; }
  void restore_values(const std::vector<Tensor>& snap);

 private:
  std::size_t find(const std::string& name) const;

  std::uint64_t seed_;
  std::size_t step_ = 0;
  std::vector<std::string> names_;
  std::vector<Tensor> values_, m1_, m2_;
  std::map<std::string, std::size_t> index_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Ops record closures that push the output gradient into
/// their inputs; backward walks node ids in reverse, which is a topological
/// order by construction.
class Tape {
 public:
  explicit Tape(bool training = false, std::uint64_t dropout_seed = 0)
      : training_(training), rng_(dropout_seed) {}

  Var leaf(Tensor value);
  /// Copies the parameter value onto the tape once; repeated calls with the
  /// same name return the same node so gradients accumulate in one place.
  Var param(ParameterStore& store, const std::string& name);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);            // elementwise
  Var bias_add(Var x, Var b);       // x: [n x f], b: [f]
  Var concat(const std::vector<Var>& xs);  // rank 2, along last axis
  Var slice(Var x, std::size_t start, std::size_t len);  // rank 2, last axis
  Var relu(Var x);
  Var sigmoid(Var x);
  Var tanh(Var x);
  /// Inverted dropout: kept entries scale by 1/(1-rate). Identity when the
  /// tape is not in training mode or rate == 0.
  Var dropout(Var x, double rate);
  Var sum(Var x);
  Var mean(Var x);
  Var square(Var x);
  Var scale(Var x, double c);
  Var one_minus(Var x);

  /// References stay valid for the life of the tape (nodes live in a deque),
  /// including across later op recording.
  const Tensor& value(Var v) const;
  /// Gradient accumulated at v by the last backward (zeros if unreached).
  const Tensor& grad_of(Var v);

  /// Seeds d(loss)/d(loss) = 1 and returns gradients for every parameter in
  /// the store (zeros for parameters the graph never touched). The loss must
  /// be scalar.
  std::map<std::string, Tensor> backward(Var loss, const ParameterStore& store);

  bool training() const { return training_; }
  /// True once any dropout mask has actually been sampled.
  bool stochastic() const { return stochastic_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    std::function<void(Tape&, int)> back;  // empty for leaves
  };

  int push(Tensor value, std::function<void(Tape&, int)> back);
  Tensor& grad_ref(int id);
  const Node& node(Var v) const;
  static void check_valid(Var v, const char* op);

  bool training_;
  Rng rng_;
  bool stochastic_ = false;
  std::deque<Node> nodes_;
  std::map<std::string, Var> param_vars_;
};

}  // namespace motion::grad
