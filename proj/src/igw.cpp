#include "modigw/igw.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace modigw {

ActionKernel::ActionKernel(FittedModel model, double gamma)
    : model_(std::move(model)), gamma_(gamma) {
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
    throw InvalidArgument("exploration parameter gamma must be positive and finite");
  }
  if (num_arms() < 2) throw InvalidArgument("action kernel needs K >= 2");
}

Arm ActionKernel::predicted_best(ContextId x) const {
  auto row = model_.predictions().row(x);
  return static_cast<Arm>(std::max_element(row.begin(), row.end()) - row.begin());
}

double ActionKernel::gap(ContextId x, Arm a) const {
  return model_.predict(x, predicted_best(x)) - model_.predict(x, a);
}

void ActionKernel::probabilities(ContextId x, std::span<double> out) const {
  const std::size_t k = num_arms();
  const auto row = model_.predictions().row(x);
  const Arm best = predicted_best(x);
  const double kd = static_cast<double>(k);
  double rest = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    if (a == best) continue;
    out[a] = 1.0 / (kd + gamma_ * (row[best] - row[a]));
    rest += out[a];
  }
  out[best] = 1.0 - rest;
  double total = 0.0;
  for (std::size_t a = 0; a < k; ++a) total += out[a];
  if (std::abs(total - 1.0) > 1e-12 || out[best] < 1.0 / kd - 1e-12) {
    throw InvariantViolation("IGW kernel failed to normalize at context " + std::to_string(x));
  }
}

std::vector<double> ActionKernel::probabilities(ContextId x) const {
  std::vector<double> p(num_arms());
  probabilities(x, p);
  return p;
}

KernelTable ActionKernel::table() const {
  KernelTable t(num_contexts(), num_arms());
  for (std::size_t x = 0; x < num_contexts(); ++x) probabilities(x, t.row(x));
  return t;
}

Arm ActionKernel::sample(ContextId x, Rng& rng) const {
  return sample_discrete(probabilities(x), rng);
}

double expected_inverse_weight(const ActionKernel& kernel, const Environment& env,
                               std::span<const Arm> policy) {
  double v = 0.0;
  std::vector<double> p(kernel.num_arms());
  for (std::size_t x = 0; x < env.num_contexts(); ++x) {
    kernel.probabilities(x, p);
    v += env.weights()[x] / p[policy[x]];
  }
  return v;
}

double inverse_weight_bound(const ActionKernel& kernel, const Environment& env,
                            std::span<const Arm> policy) {
  double expected_gap = 0.0;
  for (std::size_t x = 0; x < env.num_contexts(); ++x) {
    expected_gap += env.weights()[x] * kernel.gap(x, policy[x]);
  }
  return static_cast<double>(kernel.num_arms()) + kernel.gamma() * expected_gap;
}

double model_regret_at(const ActionKernel& kernel, ContextId x) {
  const auto p = kernel.probabilities(x);
  double total = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) total += p[a] * kernel.gap(x, a);
  return total;
}

double expected_model_regret(const ActionKernel& kernel, const Environment& env) {
  double total = 0.0;
  for (std::size_t x = 0; x < env.num_contexts(); ++x) {
    total += env.weights()[x] * model_regret_at(kernel, x);
  }
  return total;
}

}  // namespace modigw
