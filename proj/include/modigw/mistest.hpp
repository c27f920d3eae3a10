#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modigw/models.hpp"

namespace modigw {

struct MisTestConfig {
  // Fraction of the epoch data held out: |S_ho| = ceil(holdout_fraction * |S|).
  double holdout_fraction = 0.5;
  // Training/validation split used by the estimation oracle inside the test.
  double split_ratio = 0.5;
  double ridge = kDefaultRidge;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t holdout = 0;
};

// Holdout split of n samples: the last ceil(alpha * n) samples are held out.
// Throws unless the holdout is nonempty and the training part has >= 2 samples.
SplitSizes holdout_split(std::size_t n, double holdout_fraction);

// Right-hand side of the goodness-of-fit test, split into its parts.
struct Threshold {
  double rate_term = 0.0;       // 4 xi_i(n_tr, zeta / (6 i))
  double bernstein_term = 0.0;  // (26/3) ln(6 / zeta) / n_ho
  double total() const { return rate_term + bernstein_term; }
};

// `class_index` is 1-based; `dim` is d_i.
Threshold test_threshold(const RateFunction& rate, double dim, std::size_t class_index,
                         std::size_t n_train, std::size_t n_holdout, double zeta);

struct TestVerdict {
  std::size_t class_index = 0;
  // True when the union of classes 1..i is declared misspecified.
  bool misspecified = false;
  double lhs = 0.0;        // holdout loss of g_i
  double loss_full = 0.0;  // holdout loss of g_M
  double rate_term = 0.0;
  double bernstein_term = 0.0;
  std::size_t n_train = 0;
  std::size_t n_holdout = 0;
  double zeta = 0.0;

  double rhs() const { return loss_full + rate_term + bernstein_term; }
};

// Goodness-of-fit misspecification test for the union of classes[0..i).
// g_i and g_M are the estimation oracle over classes 1..i and 1..M, both
// trained on the first part of `data`; they are compared on the holdout.
TestVerdict run_test(std::span<const Sample> data, std::span<const ModelClass> classes,
                     std::size_t class_index, double zeta, const RateFunction& rate,
                     const MisTestConfig& config = {});

// Same verdicts as calling run_test for each index, sharing one set of fits.
std::vector<TestVerdict> run_tests(std::span<const Sample> data,
                                   std::span<const ModelClass> classes,
                                   std::span<const std::size_t> class_indices, double zeta,
                                   const RateFunction& rate, const MisTestConfig& config = {});

}  // namespace modigw
