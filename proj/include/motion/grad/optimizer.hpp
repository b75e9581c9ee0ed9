#pragma once

#include <map>
#include <string>

#include "motion/grad/tape.hpp"

namespace motion::grad {

/// Stepwise exponential decay: lr(step) = base * factor^floor(step/interval).
struct LrSchedule {
  double base = 1e-3;
  double factor = 0.98;
  std::size_t interval = 1000;

  double at(std::size_t step) const;
  void validate() const;  // base > 0, factor in (0, 1], interval >= 1
};

/// One Adam update (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) over every
/// parameter in the store, in registration order. Uses the store's step
/// counter for both bias correction and the schedule, then increments it.
/// Throws std::runtime_error on a non-finite gradient, naming the parameter.
void adam_step(ParameterStore& store, const std::map<std::string, Tensor>& grads,
               const LrSchedule& schedule);

}  // namespace motion::grad
