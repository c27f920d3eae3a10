#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modigw/env.hpp"
#include "modigw/models.hpp"
#include "modigw/random.hpp"

namespace modigw {

// Inverse-gap-weighting action selection kernel built from a reward model and
// an exploration parameter gamma > 0. Arms other than the predicted best a^
// get probability 1 / (K + gamma * (f(x, a^) - f(x, a))); a^ takes the rest.
class ActionKernel {
 public:
  ActionKernel(FittedModel model, double gamma);

  std::size_t num_arms() const { return model_.predictions().num_arms(); }
  std::size_t num_contexts() const { return model_.predictions().num_contexts(); }
  double gamma() const { return gamma_; }
  const FittedModel& model() const { return model_; }

  // argmax_a f(x, a), ties to the lowest arm.
  Arm predicted_best(ContextId x) const;

  // f(x, a^) - f(x, a) >= 0.
  double gap(ContextId x, Arm a) const;

  std::vector<double> probabilities(ContextId x) const;
  // Writes p(. | x) into `out`, which must have K entries.
  void probabilities(ContextId x, std::span<double> out) const;

  // p(. | x) for every context.
  KernelTable table() const;

  Arm sample(ContextId x, Rng& rng) const;

 private:
  FittedModel model_;
  double gamma_;
};

// V(p, pi) = E_x [1 / p(pi(x) | x)].
double expected_inverse_weight(const ActionKernel& kernel, const Environment& env,
                               std::span<const Arm> policy);

// K + gamma * E_x[f(x, a^) - f(x, pi(x))], which upper-bounds V(p, pi).
double inverse_weight_bound(const ActionKernel& kernel, const Environment& env,
                            std::span<const Arm> policy);

// sum_a p(a | x) (f(x, a^) - f(x, a)) at one context.
double model_regret_at(const ActionKernel& kernel, ContextId x);

// E_x sum_a p(a | x) (f(x, a^) - f(x, a)); never exceeds K / gamma.
double expected_model_regret(const ActionKernel& kernel, const Environment& env);

}  // namespace modigw
