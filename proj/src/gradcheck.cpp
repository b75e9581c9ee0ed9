#include "motion/grad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace motion::grad {

namespace {

// Training-mode tape: the graph under test is the one training runs, and a
// sampled dropout mask makes the loss stochastic, which has no meaningful
// finite difference.
double eval_loss(ParameterStore& store, const std::function<Var(Tape&)>& build) {
  Tape tape(true);
  Var loss = build(tape);
  if (tape.stochastic()) {
    throw std::invalid_argument("grad_check: loss sampled a dropout mask; "
                                "finite differences need a deterministic graph");
  }
  const Tensor& v = tape.value(loss);
  if (v.numel() != 1) {
    throw std::invalid_argument("grad_check: loss must be scalar, got " + v.shape_str());
  }
  return v[0];
}

}  // namespace

GradCheckReport grad_check(ParameterStore& store,
                           const std::function<Var(Tape&)>& build, double eps,
                           double tol) {
  // Analytic pass.
  Tape tape(true);
  Var loss = build(tape);
  if (tape.stochastic()) {
    throw std::invalid_argument("grad_check: loss sampled a dropout mask; "
                                "finite differences need a deterministic graph");
  }
  auto grads = tape.backward(loss, store);

  GradCheckReport report;
  for (const auto& name : store.names()) {
    Tensor& theta = store.get(name);
    const Tensor& analytic = grads.at(name);
    GradCheckEntry entry{name, 0.0};
    for (std::size_t i = 0; i < theta.numel(); ++i) {
      const double keep = theta[i];
      theta[i] = keep + eps;
      const double up = eval_loss(store, build);
      theta[i] = keep - eps;
      const double down = eval_loss(store, build);
      theta[i] = keep;
      const double fd = (up - down) / (2.0 * eps);
      const double a = analytic[i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
      entry.max_rel_error = std::max(entry.max_rel_error, rel);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  report.pass = report.max_rel_error < tol;
  return report;
}

}  // namespace motion::grad
