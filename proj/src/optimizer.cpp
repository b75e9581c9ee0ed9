#include "motion/grad/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace motion::grad {

double LrSchedule::at(std::size_t step) const {
  validate();
  return base * std::pow(factor, static_cast<double>(step / interval));
}

void LrSchedule::validate() const {
  if (!(base > 0.0)) throw std::invalid_argument("lr schedule: base must be positive");
  if (!(factor > 0.0) || factor > 1.0) {
    throw std::invalid_argument("lr schedule: decay factor must lie in (0, 1]");
  }
  if (interval == 0) throw std::invalid_argument("lr schedule: interval must be >= 1");
}

void adam_step(ParameterStore& store, const std::map<std::string, Tensor>& grads,
               const LrSchedule& schedule) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const std::size_t step = store.step();
  const double lr = schedule.at(step);
  const double t = static_cast<double>(step + 1);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);

  for (const auto& name : store.names()) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      throw std::runtime_error("adam: missing gradient for '" + name + "'");
    }
    const Tensor& g = it->second;
    Tensor& theta = store.get(name);
    if (!g.same_shape(theta)) {
      throw std::runtime_error("adam: gradient shape mismatch for '" + name + "'");
    }
    Tensor& m = store.moment1(name);
    Tensor& v = store.moment2(name);
    for (std::size_t i = 0; i < theta.numel(); ++i) {
      const double gi = g[i];
      if (!std::isfinite(gi)) {
        throw std::runtime_error("adam: non-finite gradient for '" + name + "' at step " +
                                 std::to_string(step));
      }
      m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
      v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
      theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
  store.set_step(step + 1);
}

}  // namespace motion::grad
