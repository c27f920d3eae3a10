#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "modigw/models.hpp"
#include "modigw/random.hpp"
#include "modigw/types.hpp"

namespace modigw {

enum class NoiseKind { bernoulli, gaussian };

// Reward noise around the true mean. Gaussian noise is clamped to [0, 1];
// its location is shifted per cell so that the clamped reward still has mean
// f*(x, a). A Gaussian with sigma = 0 is deterministic.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::bernoulli;
  double sigma = 0.0;
};

// A context drawn by the environment together with the full reward vector.
// Only the played arm's entry is ever revealed to a learner.
struct Round {
  ContextId context = 0;
  std::vector<double> rewards;
};

// Finite-context stochastic bandit environment with known ground truth.
// Immutable after construction.
class Environment {
 public:
  Environment(std::vector<double> weights, ArmTable true_model, NoiseSpec noise,
              std::uint64_t seed = 0);

  std::size_t num_contexts() const { return weights_.size(); }
  std::size_t num_arms() const { return true_model_.num_arms(); }
  std::span<const double> weights() const { return weights_; }
  const ArmTable& true_model() const { return true_model_; }
  const NoiseSpec& noise() const { return noise_; }
  std::uint64_t seed() const { return seed_; }

  // pi*(x), ties to the lowest arm.
  Arm optimal_arm(ContextId x) const { return optimal_[x]; }

  // f*(x, pi*(x)) - f*(x, a).
  double instant_regret(ContextId x, Arm a) const;

  ContextId sample_context(Rng& rng) const;
  double sample_reward(ContextId x, Arm a, Rng& rng) const;
  Round sample_round(Rng& rng) const;

 private:
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  ArmTable true_model_;
  NoiseSpec noise_;
  std::uint64_t seed_;
  std::vector<Arm> optimal_;
  ArmTable location_;  // Gaussian location per cell
};

// Mean of clamp(Y, 0, 1) for Y ~ N(location, sigma^2).
double clamped_gaussian_mean(double location, double sigma);

// Action-selection kernel p(a | x) as a dense table.
using KernelTable = ArmTable;

KernelTable uniform_kernel(std::size_t contexts, std::size_t arms);

// Deterministic kernel playing policy[x] at context x.
KernelTable policy_kernel(std::span<const Arm> policy, std::size_t arms);

// b(p) = min_{f in class} E_x sum_a p(a|x) (f(x,a) - f*(x,a))^2, computed by
// exact weighted projection.
double misspecification(const Environment& env, const ModelClass& model_class,
                        const KernelTable& kernel);

// Certified bracket for B = max_p b(p).
//
// b is concave in p (a pointwise minimum of functions linear in p), so the
// maximum is a concave program over a product of simplices. It is solved by
// Frank-Wolfe; `upper` is certified by the duality gap, `lower` is attained
// by `argmax`.
struct MaxMisspecification {
  double lower = 0.0;
  double upper = 0.0;
  KernelTable argmax;
  std::size_t iterations = 0;
};

MaxMisspecification max_misspecification(const Environment& env, const ModelClass& model_class,
                                         double tolerance = 1e-10,
                                         std::size_t max_iterations = 5000);

// min_p b(p). The minimum of a concave function is attained at a vertex,
// i.e. a deterministic policy, so enumeration is exact. When there are more
// than `max_policies` policies the certified lower bound 0 is returned.
struct MinMisspecification {
  double value = 0.0;
  bool exact = false;
};

MinMisspecification min_misspecification(const Environment& env, const ModelClass& model_class,
                                         std::size_t max_policies = 1u << 16);

// Misspecification values below this are treated as exact realizability.
inline constexpr double kRealizableTolerance = 1e-14;

// Epoch boundaries of the doubling schedule: tau_0 = 0, tau_m = tau_1 2^(m-1).
double epoch_end(std::size_t m, std::size_t tau1);
double epoch_length(std::size_t m, std::size_t tau1);

// Safe epoch m*_i: the largest m with
// xi_i(tau_m - tau_{m-1}, delta / (4 M m^2)) >= C0 * min_B.
// Returns kUnbounded when min_B is (numerically) zero and 0 when no epoch
// qualifies.
std::size_t safe_epoch(const RateFunction& rate, double dim, double min_b, double c0,
                       double delta, std::size_t num_classes, std::size_t tau1);

// Per-class diagnostics of an environment against a class sequence.
struct DiagnosticsReport {
  std::vector<double> b_upper;    // certified max_p b_i(p)
  std::vector<double> b_lower;    // attained lower end of the B_i bracket
  std::vector<double> b_uniform;  // b_i(u)
  std::vector<double> kappa_lower;
  std::vector<bool> kappa_exact;
  std::vector<std::size_t> m_star;
};

DiagnosticsReport diagnose(const Environment& env, std::span<const ModelClass> classes,
                           const RateFunction& rate, double c0, double delta, std::size_t tau1);

}  // namespace modigw
