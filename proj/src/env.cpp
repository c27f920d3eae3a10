#include "modigw/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace modigw {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

bool deterministic_cell(const NoiseSpec& noise, double mean) {
  return noise.kind == NoiseKind::gaussian && (noise.sigma == 0.0 || mean <= 0.0 || mean >= 1.0);
}

double solve_location(double mean, double sigma) {
  double lo = mean - 1.0;
  double hi = mean + 1.0;
  while (clamped_gaussian_mean(lo, sigma) > mean) lo -= 2.0 * (hi - lo);
  while (clamped_gaussian_mean(hi, sigma) < mean) hi += 2.0 * (hi - lo);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (clamped_gaussian_mean(mid, sigma) < mean ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double clamped_gaussian_mean(double location, double sigma) {
  if (sigma <= 0.0) return std::clamp(location, 0.0, 1.0);
  const double lo = (0.0 - location) / sigma;
  const double hi = (1.0 - location) / sigma;
  const double inside = normal_cdf(hi) - normal_cdf(lo);
  return (1.0 - normal_cdf(hi)) + location * inside + sigma * (normal_pdf(lo) - normal_pdf(hi));
}

Environment::Environment(std::vector<double> weights, ArmTable true_model, NoiseSpec noise,
                         std::uint64_t seed)
    : weights_(std::move(weights)),
      true_model_(std::move(true_model)),
      noise_(noise),
      seed_(seed) {
  if (weights_.empty()) throw InvalidArgument("environment needs at least one context");
  if (true_model_.num_contexts() != weights_.size()) {
    throw InvalidArgument("true model has " + std::to_string(true_model_.num_contexts()) +
                          " contexts but " + std::to_string(weights_.size()) +
                          " context weights were given");
  }
  if (true_model_.num_arms() < 2) throw InvalidArgument("environment needs K >= 2 arms");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw InvalidArgument("context weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("context weights sum to " + std::to_string(total) + ", expected 1");
  }
  for (double v : true_model_.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("true model values must lie in [0, 1]");
  }
  if (noise_.kind == NoiseKind::gaussian && !(noise_.sigma >= 0.0)) {
    throw InvalidArgument("gaussian noise sigma must be nonnegative");
  }

  cumulative_.resize(weights_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());

  const std::size_t arms = true_model_.num_arms();
  optimal_.resize(weights_.size());
  location_ = ArmTable(weights_.size(), arms);
  for (std::size_t x = 0; x < weights_.size(); ++x) {
    auto row = true_model_.row(x);
    optimal_[x] = static_cast<Arm>(std::max_element(row.begin(), row.end()) - row.begin());
    if (noise_.kind != NoiseKind::gaussian) continue;
    for (std::size_t a = 0; a < arms; ++a) {
      location_(x, a) = deterministic_cell(noise_, row[a]) ? row[a]
                                                           : solve_location(row[a], noise_.sigma);
    }
  }
}

double Environment::instant_regret(ContextId x, Arm a) const {
  return true_model_(x, optimal_[x]) - true_model_(x, a);
}

ContextId Environment::sample_context(Rng& rng) const {
  const double u = uniform01(rng) * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  auto x = static_cast<ContextId>(it - cumulative_.begin());
  if (x >= weights_.size()) x = weights_.size() - 1;
  while (weights_[x] == 0.0 && x > 0) --x;
  return x;
}

double Environment::sample_reward(ContextId x, Arm a, Rng& rng) const {
  const double mean = true_model_(x, a);
  if (noise_.kind == NoiseKind::bernoulli) return uniform01(rng) < mean ? 1.0 : 0.0;
  if (deterministic_cell(noise_, mean)) return mean;
  std::normal_distribution<double> normal(location_(x, a), noise_.sigma);
  return std::clamp(normal(rng), 0.0, 1.0);
}

Round Environment::sample_round(Rng& rng) const {
  Round r;
  r.context = sample_context(rng);
  r.rewards.resize(num_arms());
  for (std::size_t a = 0; a < num_arms(); ++a) r.rewards[a] = sample_reward(r.context, a, rng);
  return r;
}

KernelTable uniform_kernel(std::size_t contexts, std::size_t arms) {
  return KernelTable(contexts, arms, 1.0 / static_cast<double>(arms));
}

KernelTable policy_kernel(std::span<const Arm> policy, std::size_t arms) {
  KernelTable k(policy.size(), arms, 0.0);
  for (std::size_t x = 0; x < policy.size(); ++x) k(x, policy[x]) = 1.0;
  return k;
}

namespace {

ArmTable cell_weights(const Environment& env, const KernelTable& kernel) {
  if (kernel.num_contexts() != env.num_contexts() || kernel.num_arms() != env.num_arms()) {
    throw InvalidArgument("kernel shape does not match the environment");
  }
  ArmTable w(env.num_contexts(), env.num_arms());
  for (std::size_t x = 0; x < env.num_contexts(); ++x)
    for (std::size_t a = 0; a < env.num_arms(); ++a) w(x, a) = env.weights()[x] * kernel(x, a);
  return w;
}

struct Evaluation {
  double value = 0.0;
  ArmTable projection;
};

Evaluation evaluate(const Environment& env, const ModelClass& cls, const KernelTable& kernel) {
  if (cls.num_contexts() != env.num_contexts() || cls.num_arms() != env.num_arms()) {
    throw InvalidArgument("model class is defined over a different (context, arm) space");
  }
  const ArmTable w = cell_weights(env, kernel);
  Evaluation e{0.0, cls.project(env.true_model(), w)};
  for (std::size_t x = 0; x < env.num_contexts(); ++x) {
    for (std::size_t a = 0; a < env.num_arms(); ++a) {
      const double d = e.projection(x, a) - env.true_model()(x, a);
      e.value += w(x, a) * d * d;
    }
  }
  e.value = std::max(0.0, e.value);
  return e;
}

KernelTable mix(const KernelTable& p, const KernelTable& s, double step) {
  KernelTable out(p.num_contexts(), p.num_arms());
  for (std::size_t x = 0; x < p.num_contexts(); ++x)
    for (std::size_t a = 0; a < p.num_arms(); ++a)
      out(x, a) = (1.0 - step) * p(x, a) + step * s(x, a);
  return out;
}

}  // namespace

double misspecification(const Environment& env, const ModelClass& model_class,
                        const KernelTable& kernel) {
  return evaluate(env, model_class, kernel).value;
}

MaxMisspecification max_misspecification(const Environment& env, const ModelClass& model_class,
                                         double tolerance, std::size_t max_iterations) {
  const std::size_t contexts = env.num_contexts();
  const std::size_t arms = env.num_arms();
  KernelTable p = uniform_kernel(contexts, arms);
  MaxMisspecification out;
  out.upper = std::numeric_limits<double>::infinity();
  out.lower = -1.0;

  for (std::size_t it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    const Evaluation e = evaluate(env, model_class, p);
    if (e.value > out.lower) {
      out.lower = e.value;
      out.argmax = p;
    }
    // Supergradient of b at p: w(x) (f_p(x,a) - f*(x,a))^2 for the projection f_p.
    KernelTable vertex(contexts, arms, 0.0);
    double gap = 0.0;
    for (std::size_t x = 0; x < contexts; ++x) {
      double best = -1.0;
      Arm best_arm = 0;
      double current = 0.0;
      for (std::size_t a = 0; a < arms; ++a) {
        const double d = e.projection(x, a) - env.true_model()(x, a);
        const double g = env.weights()[x] * d * d;
        current += p(x, a) * g;
        if (g > best) {
          best = g;
          best_arm = a;
        }
      }
      vertex(x, best_arm) = 1.0;
      gap += best - current;
    }
    gap = std::max(0.0, gap);
    out.upper = std::min(out.upper, e.value + gap);
    if (out.upper - out.lower <= tolerance) break;

    // Golden-section line search; b is concave along the segment.
    constexpr double kInvPhi = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double c = hi - kInvPhi * (hi - lo), d = lo + kInvPhi * (hi - lo);
    double fc = misspecification(env, model_class, mix(p, vertex, c));
    double fd = misspecification(env, model_class, mix(p, vertex, d));
    for (int k = 0; k < 60 && hi - lo > 1e-12; ++k) {
      if (fc < fd) {
        lo = c;
        c = d;
        fc = fd;
        d = lo + kInvPhi * (hi - lo);
        fd = misspecification(env, model_class, mix(p, vertex, d));
      } else {
        hi = d;
        d = c;
        fd = fc;
        c = hi - kInvPhi * (hi - lo);
        fc = misspecification(env, model_class, mix(p, vertex, c));
      }
    }
    const double step = 0.5 * (lo + hi);
    const double at_vertex = misspecification(env, model_class, vertex);
    if (at_vertex >= std::max(fc, fd)) {
      p = vertex;
    } else {
      p = mix(p, vertex, step);
    }
  }
  out.lower = std::max(0.0, out.lower);
  out.upper = std::min(1.0, std::max(out.upper, out.lower));
  return out;
}

MinMisspecification min_misspecification(const Environment& env, const ModelClass& model_class,
                                         std::size_t max_policies) {
  const std::size_t contexts = env.num_contexts();
  const std::size_t arms = env.num_arms();
  double count = 1.0;
  for (std::size_t x = 0; x < contexts; ++x) count *= static_cast<double>(arms);
  if (count > static_cast<double>(max_policies)) return {0.0, false};

  std::vector<Arm> policy(contexts, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    best = std::min(best, misspecification(env, model_class, policy_kernel(policy, arms)));
    std::size_t x = 0;
    while (x < contexts && ++policy[x] == arms) policy[x++] = 0;
    if (x == contexts) break;
  }
  return {best, true};
}

double epoch_end(std::size_t m, std::size_t tau1) {
  if (m == 0) return 0.0;
  return static_cast<double>(tau1) * std::ldexp(1.0, static_cast<int>(m) - 1);
}

double epoch_length(std::size_t m, std::size_t tau1) {
  return epoch_end(m, tau1) - epoch_end(m - 1, tau1);
}

std::size_t safe_epoch(const RateFunction& rate, double dim, double min_b, double c0,
                       double delta, std::size_t num_classes, std::size_t tau1) {
  if (min_b <= kRealizableTolerance) return kUnbounded;
  const double threshold = c0 * min_b;
  std::size_t best = 0;
  for (std::size_t m = 1;; ++m) {
    const double n = epoch_length(m, tau1);
    if (!std::isfinite(n)) break;
    const double md = static_cast<double>(m);
    const double zeta = delta / (4.0 * static_cast<double>(num_classes) * md * md);
    if (rate(dim, n, zeta) >= threshold) best = m;
  }
  return best;
}

DiagnosticsReport diagnose(const Environment& env, std::span<const ModelClass> classes,
                           const RateFunction& rate, double c0, double delta, std::size_t tau1) {
  DiagnosticsReport r;
  const KernelTable u = uniform_kernel(env.num_contexts(), env.num_arms());
  double running_min = std::numeric_limits<double>::infinity();
  for (const auto& cls : classes) {
    const auto bmax = max_misspecification(env, cls);
    const auto kappa = min_misspecification(env, cls);
    r.b_upper.push_back(bmax.upper);
    r.b_lower.push_back(bmax.lower);
    r.b_uniform.push_back(misspecification(env, cls, u));
    r.kappa_lower.push_back(kappa.value);
    r.kappa_exact.push_back(kappa.exact);
    running_min = std::min(running_min, bmax.upper);
    r.m_star.push_back(safe_epoch(rate, static_cast<double>(cls.dim()), running_min, c0, delta,
                                  classes.size(), tau1));
  }
  return r;
}

}  // namespace modigw
