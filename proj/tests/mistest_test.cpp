#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "modigw/env.hpp"
#include "modigw/mistest.hpp"

using namespace modigw;

namespace {

Dataset bernoulli_data(const ArmTable& fstar, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset data;
  for (std::size_t k = 0; k < n; ++k) {
    const ContextId x = gen() % fstar.num_contexts();
    const Arm a = gen() % fstar.num_arms();
    data.push_back({x, a, u(gen) < fstar(x, a) ? 1.0 : 0.0});
  }
  return data;
}

}  // namespace

TEST(Threshold, HandValues) {
  const auto xi = RateFunction::parametric(1.0);
  const auto t = test_threshold(xi, 2, 1, 100, 100, 0.6);
  const double rate = 4.0 * 2.0 * std::log(100.0) * std::log(10.0) / 100.0;
  const double bern = 26.0 / 3.0 * std::log(10.0) / 100.0;
  EXPECT_NEAR(t.rate_term, rate, 1e-14);
  EXPECT_NEAR(t.bernstein_term, bern, 1e-14);
  EXPECT_NEAR(t.total(), rate + bern, 1e-14);
  // class index enters through zeta / (6 i)
  const auto t3 = test_threshold(xi, 2, 3, 100, 100, 0.6);
  EXPECT_NEAR(t3.rate_term, 4.0 * 2.0 * std::log(100.0) * std::log(30.0) / 100.0, 1e-14);
}

TEST(Threshold, DecreasesInSampleSizes) {
  const auto xi = RateFunction::parametric(1.0);
  for (std::size_t n = 3; n < 5000; n = n * 3 / 2 + 1) {
    EXPECT_GT(test_threshold(xi, 4, 2, n, 50, 0.1).total(),
              test_threshold(xi, 4, 2, n + 1, 50, 0.1).total());
    EXPECT_GT(test_threshold(xi, 4, 2, 50, n, 0.1).total(),
              test_threshold(xi, 4, 2, 50, n + 1, 0.1).total());
  }
}

TEST(Threshold, DivergesAsZetaVanishes) {
  const auto xi = RateFunction::parametric(1.0);
  double prev = 0.0;
  for (double z = 0.5; z > 1e-300; z *= 1e-10) {
    const double t = test_threshold(xi, 2, 1, 100, 100, z).total();
    EXPECT_GT(t, prev);
    prev = t;
  }
  EXPECT_GT(prev, 100.0);
}

TEST(Split, Sizes) {
  EXPECT_EQ(holdout_split(10, 0.5).holdout, 5u);
  EXPECT_EQ(holdout_split(11, 0.5).holdout, 6u);
  EXPECT_EQ(holdout_split(11, 0.5).train, 5u);
  EXPECT_EQ(holdout_split(10, 0.01).holdout, 1u);
  EXPECT_THROW(holdout_split(2, 0.5), InvalidArgument);
  EXPECT_THROW(holdout_split(10, 0.9), InvalidArgument);
  EXPECT_NO_THROW(holdout_split(3, 0.3));
}

TEST(RunTest, FullUnionNeverFires) {
  const std::vector<ModelClass> classes{ModelClass::tabular_per_arm(3, 2),
                                        ModelClass::tabular_full(3, 2)};
  ArmTable fstar(3, 2);
  fstar(0, 0) = 0.1, fstar(0, 1) = 0.9, fstar(1, 0) = 0.9, fstar(1, 1) = 0.1;
  fstar(2, 0) = 0.5, fstar(2, 1) = 0.5;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto data = bernoulli_data(fstar, 200, seed);
    const auto v = run_test(data, classes, 2, 0.1, RateFunction::parametric(1.0));
    EXPECT_FALSE(v.misspecified);
    EXPECT_EQ(v.lhs, v.loss_full);
    EXPECT_GT(v.rate_term + v.bernstein_term, 0.0);
  }
}

TEST(RunTest, VerdictBreakdown) {
  const std::vector<ModelClass> classes{ModelClass::tabular_constant(2, 2),
                                        ModelClass::tabular_full(2, 2)};
  ArmTable fstar(2, 2);
  fstar(0, 0) = 0.0, fstar(0, 1) = 0.0, fstar(1, 0) = 1.0, fstar(1, 1) = 1.0;
  const auto data = bernoulli_data(fstar, 4000, 3);
  const auto v = run_test(data, classes, 1, 0.1, RateFunction::parametric(1.0));
  EXPECT_EQ(v.n_holdout, 2000u);
  EXPECT_EQ(v.n_train, 2000u);
  const auto t = test_threshold(RateFunction::parametric(1.0), 1, 1, 2000, 2000, 0.1);
  EXPECT_EQ(v.rate_term, t.rate_term);
  EXPECT_EQ(v.bernstein_term, t.bernstein_term);
  EXPECT_DOUBLE_EQ(v.rhs(), v.loss_full + t.total());
  EXPECT_EQ(v.misspecified, v.lhs > v.rhs());
  // noiseless and far from constant: loss 0.25 against 0 on the holdout
  EXPECT_TRUE(v.misspecified);
}

TEST(RunTest, DeterministicAndBatchConsistent) {
  const std::vector<ModelClass> classes{ModelClass::tabular_constant(3, 2),
                                        ModelClass::tabular_per_arm(3, 2),
                                        ModelClass::tabular_full(3, 2)};
  ArmTable fstar(3, 2, 0.4);
  fstar(1, 1) = 0.8;
  const auto data = bernoulli_data(fstar, 300, 11);
  const auto rate = RateFunction::parametric(0.2);
  const std::vector<std::size_t> idx{1, 2, 3};
  const auto batch = run_tests(data, classes, idx, 0.05, rate);
  for (std::size_t i = 1; i <= 3; ++i) {
    const auto single = run_test(data, classes, i, 0.05, rate);
    EXPECT_EQ(single.lhs, batch[i - 1].lhs);
    EXPECT_EQ(single.rhs(), batch[i - 1].rhs());
    EXPECT_EQ(single.misspecified, batch[i - 1].misspecified);
    const auto again = run_test(data, classes, i, 0.05, rate);
    EXPECT_EQ(again.lhs, single.lhs);
  }
}

TEST(RunTest, RejectsBadInput) {
  const std::vector<ModelClass> classes{ModelClass::tabular_full(1, 2)};
  const Dataset tiny{{0, 0, 1.0}, {0, 1, 0.0}};
  EXPECT_THROW(run_test(tiny, classes, 1, 0.1, RateFunction::parametric(1.0)), InvalidArgument);
  const Dataset data(20, Sample{0, 0, 1.0});
  EXPECT_THROW(run_test(data, classes, 2, 0.1, RateFunction::parametric(1.0)), InvalidArgument);
  EXPECT_THROW(run_test(data, classes, 0, 0.1, RateFunction::parametric(1.0)), InvalidArgument);
}

// Realizable first class: false detections stay within zeta + 3 binomial sd
// for every confidence level.
TEST(RunTest, SoundnessOnRealizableClass) {
  const std::vector<ModelClass> classes{ModelClass::tabular_per_arm(4, 2),
                                        ModelClass::tabular_full(4, 2)};
  ArmTable fstar(4, 2);
  for (ContextId x = 0; x < 4; ++x) fstar(x, 0) = 0.3, fstar(x, 1) = 0.7;
  const auto rate = RateFunction::parametric(1.0);
  for (double zeta : {0.05, 0.1, 0.2}) {
    int fired = 0;
    const int trials = 200;
    for (int s = 0; s < trials; ++s) {
      fired += run_test(bernoulli_data(fstar, 400, 1000 + s), classes, 1, zeta, rate).misspecified;
    }
    EXPECT_LE(fired / double(trials), zeta + 3 * std::sqrt(zeta * (1 - zeta) / trials));
  }
}

// Detection rate does not fall as the sample grows on a clearly misspecified class.
TEST(RunTest, PowerGrowsWithSampleSize) {
  const std::vector<ModelClass> classes{ModelClass::tabular_constant(2, 2),
                                        ModelClass::tabular_full(2, 2)};
  ArmTable fstar(2, 2);
  fstar(0, 0) = fstar(0, 1) = 0.1;
  fstar(1, 0) = fstar(1, 1) = 0.9;
  const auto rate = RateFunction::parametric(1.0);
  double prev = -1.0;
  for (std::size_t n : {64, 256, 1024, 4096}) {
    int fired = 0;
    for (int s = 0; s < 50; ++s) {
      fired += run_test(bernoulli_data(fstar, n, 7000 + s), classes, 1, 0.1, rate).misspecified;
    }
    const double r = fired / 50.0;
    EXPECT_GE(r, prev);
    prev = r;
  }
  EXPECT_EQ(prev, 1.0);
}
