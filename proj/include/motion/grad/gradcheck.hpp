#pragma once

#include <functional>
#include <string>
#include <vector>

#include "motion/grad/tape.hpp"

namespace motion::grad {

struct GradCheckEntry {
  std::string param;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  bool pass = false;
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> entries;
};

/// Compares reverse-mode gradients against central finite differences for
/// every element of every parameter in the store. `build` must construct the
/// scalar loss on the given tape from the store's current values; it runs
/// once per perturbation, so keep the model desk-sized. Relative error is
/// |a - f| / max(|a|, |f|, 1e-6). Refuses graphs that sampled a dropout mask,
/// since a stochastic loss has no well-defined finite difference.
GradCheckReport grad_check(ParameterStore& store,
                           const std::function<Var(Tape&)>& build, double eps = 1e-5,
                           double tol = 1e-4);

}  // namespace motion::grad
