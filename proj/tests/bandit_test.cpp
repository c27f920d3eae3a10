#include <gtest/gtest.h>

#include <cmath>

#include "modigw/bandit.hpp"

using namespace modigw;

namespace {

Environment two_context_env(NoiseSpec noise = {}) {
  ArmTable f(2, 3);
  f(0, 0) = 0.2, f(0, 1) = 0.6, f(0, 2) = 0.4;
  f(1, 0) = 0.7, f(1, 1) = 0.3, f(1, 2) = 0.5;
  return Environment({0.5, 0.5}, f, noise);
}

RunConfig config(std::size_t horizon, std::uint64_t seed = 1) {
  RunConfig c;
  c.horizon = horizon;
  c.tau1 = 8;
  c.delta = 0.1;
  c.c1 = 0.1;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Gamma, HandValue) {
  const RateFunction quarter([](double, double, double) { return 0.25; });
  EXPECT_DOUBLE_EQ(exploration_gamma(quarter, 1, 3, 2, 0.1, 2, 4), 1.0);
}

TEST(Gamma, ExactFormula) {
  const auto xi = RateFunction::parametric(0.7);
  // completed epoch 3 with tau1 = 4: length 8, zeta = delta / (4 M 9)
  const double zeta = 0.1 / (4.0 * 3 * 9);
  const double expected = std::sqrt(5.0 / (8.0 * xi(6, 8, zeta)));
  EXPECT_EQ(exploration_gamma(xi, 6, 3, 5, 0.1, 3, 4), expected);
}

// Epochs 1 and 2 have the same length, so the comparison starts at m = 2.
TEST(Gamma, NonDecreasingInEpoch) {
  const auto xi = RateFunction::parametric(1.0);
  for (double d : {2.0, 8.0, 40.0}) {
    double prev = 0.0;
    for (std::size_t m = 2; m <= 12; ++m) {
      const double g = exploration_gamma(xi, d, m, 4, 0.1, 4, 16);
      EXPECT_GE(g, prev) << "d=" << d << " m=" << m;
      prev = g;
    }
  }
}

TEST(Gamma, RatioAcrossClasses) {
  const auto xi = RateFunction::parametric(1.0);
  for (std::size_t m = 1; m <= 10; ++m) {
    const double gj = exploration_gamma(xi, 4, m, 3, 0.1, 3, 2);
    const double gi = exploration_gamma(xi, 36, m, 3, 0.1, 3, 2);
    EXPECT_GE(gj, gi);
    EXPECT_NEAR(gj / gi, 3.0, 1e-12);
  }
}

TEST(Budget, EpochConfidence) {
  EXPECT_DOUBLE_EQ(epoch_confidence(0.1, 4, 3), 0.1 / (4.0 * 4 * 9));
  double sum = 0.0;
  for (std::size_t m = 1; m <= 1000000; ++m) sum += 4 * epoch_confidence(0.2, 4, m);
  // summed over the M classes: delta * sum 1/(4 m^2) < delta * pi^2 / 24 < delta / 2
  EXPECT_LE(sum, 0.2 * M_PI * M_PI / 24.0);
  EXPECT_LE(sum, 0.1);
}

TEST(ModIgw, FirstEpochIsUniform) {
  const std::vector<ModelClass> classes{ModelClass::tabular_full(2, 3)};
  ModIgw learner(classes, config(100));
  EXPECT_EQ(learner.state().gamma, 1.0);
  EXPECT_EQ(learner.state().index_set, std::vector<std::size_t>{1});
  const ActionKernel k(learner.state().model, learner.state().gamma);
  for (ContextId x = 0; x < 2; ++x)
    for (double p : k.probabilities(x)) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(ModIgw, EpochLengthsFollowDoubling) {
  const std::vector<ModelClass> classes{ModelClass::tabular_per_arm(2, 3),
                                        ModelClass::tabular_full(2, 3)};
  const auto env = two_context_env();
  ModIgw learner(classes, config(100));
  Rng er = environment_stream(3), lr = learner_stream(3);
  std::vector<std::size_t> lengths;
  while (true) {
    const auto rounds = learner.run_epoch(env, er, lr);
    lengths.push_back(rounds.size());
    if (learner.finished()) break;
    const auto rec = learner.end_of_epoch_update();
    EXPECT_EQ(rec.samples, rounds.size());
  }
  EXPECT_EQ(lengths, (std::vector<std::size_t>{8, 8, 16, 32, 36}));
}

TEST(ModIgw, ShortHorizonIsOneTruncatedEpoch) {
  const std::vector<ModelClass> classes{ModelClass::tabular_full(2, 3)};
  const auto log = run_mod_igw(two_context_env(), classes, config(5));
  EXPECT_EQ(log.rounds.size(), 5u);
  EXPECT_TRUE(log.epochs.empty());
  for (const auto& r : log.rounds) EXPECT_EQ(r.epoch, 1u);
}

TEST(ModIgw, RunsAreBitIdentical) {
  const std::vector<ModelClass> classes{ModelClass::tabular_per_arm(2, 3),
                                        ModelClass::tabular_full(2, 3)};
  const auto a = run_mod_igw(two_context_env(), classes, config(3000, 9));
  const auto b = run_mod_igw(two_context_env(), classes, config(3000, 9));
  EXPECT_EQ(a.rounds, b.rounds);
  const auto c = run_mod_igw(two_context_env(), classes, config(3000, 10));
  EXPECT_NE(a.rounds, c.rounds);
}

TEST(ModIgw, SingleClassMatchesFixedClassIgw) {
  const std::vector<ModelClass> all{ModelClass::tabular_per_arm(2, 3),
                                    ModelClass::tabular_full(2, 3)};
  const std::vector<ModelClass> only{all[1]};
  const auto a = run_mod_igw(two_context_env(), only, config(2000, 4));
  const auto b = run_fixed_class_igw(two_context_env(), all, 2, config(2000, 4));
  EXPECT_EQ(a.rounds, b.rounds);
  for (const auto& e : a.epochs) {
    EXPECT_EQ(e.index_set, std::vector<std::size_t>{1});
    EXPECT_EQ(e.gamma, exploration_gamma(config(1).rate(), 6, e.epoch, 3, 0.1, 1, 8));
  }
}

TEST(ModIgw, StateInvariantsAlongRun) {
  const std::vector<ModelClass> classes{ModelClass::tabular_constant(2, 3),
                                        ModelClass::tabular_per_arm(2, 3),
                                        ModelClass::tabular_full(2, 3)};
  const auto cfg = config(20000, 2);
  const auto log = run_mod_igw(two_context_env(), classes, cfg);
  std::vector<std::size_t> prev{1, 2, 3};
  std::size_t prev_active = 1;
  for (const auto& e : log.epochs) {
    EXPECT_TRUE(std::includes(prev.begin(), prev.end(), e.index_set.begin(), e.index_set.end()));
    EXPECT_EQ(e.active_index, e.index_set.front());
    EXPECT_GE(e.active_index, prev_active);
    EXPECT_EQ(e.zeta, epoch_confidence(0.1, 3, e.epoch));
    EXPECT_EQ(e.gamma, exploration_gamma(cfg.rate(), classes[e.active_index - 1].dim(), e.epoch,
                                         3, 0.1, 3, 8));
    // only surviving indices are tested
    EXPECT_EQ(e.verdicts.size(), prev.size());
    prev = e.index_set;
    prev_active = e.active_index;
  }
  // the full class is never declared misspecified
  EXPECT_EQ(prev.back(), 3u);
  for (const auto& r : log.rounds) {
    EXPECT_GE(r.regret, 0.0);
    EXPECT_LE(r.regret, 1.0);
  }
}

TEST(ModIgw, RealizableClassesAreKept) {
  // every class contains f*: the per-arm structure is exact.
  ArmTable f(2, 3);
  for (ContextId x = 0; x < 2; ++x) f(x, 0) = 0.2, f(x, 1) = 0.6, f(x, 2) = 0.4;
  const Environment env({0.5, 0.5}, f, {});
  const std::vector<ModelClass> classes{ModelClass::tabular_per_arm(2, 3),
                                        ModelClass::tabular_full(2, 3)};
  int kept = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto log = run_mod_igw(env, classes, config(8000, s));
    kept += log.epochs.back().index_set.size() == 2;
  }
  EXPECT_EQ(kept, 20);
}

TEST(ModIgw, MisspecifiedFirstClassIsEvicted) {
  ArmTable f(2, 2);
  f(0, 0) = f(0, 1) = 0.05;
  f(1, 0) = f(1, 1) = 0.95;
  const Environment env({0.5, 0.5}, f, {});
  const std::vector<ModelClass> classes{ModelClass::tabular_constant(2, 2),
                                        ModelClass::tabular_full(2, 2)};
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto log = run_mod_igw(env, classes, config(20000, s));
    EXPECT_EQ(log.epochs.back().index_set, std::vector<std::size_t>{2}) << "seed " << s;
  }
}

TEST(Uniform, MatchesClosedFormRegret) {
  // one context, constant gap g: expected regret per round is g (K-1)/K
  ArmTable f(1, 4);
  f(0, 0) = 0.8, f(0, 1) = 0.5, f(0, 2) = 0.5, f(0, 3) = 0.5;
  const Environment env({1.0}, f, {});
  const std::size_t T = 20000;
  double sum = 0.0, sq = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    auto cfg = config(T, s);
    double r = 0.0;
    for (const auto& rec : run_uniform_random(env, cfg).rounds) r += rec.regret;
    sum += r;
    sq += r * r;
  }
  const double mean = sum / seeds;
  const double sd = std::sqrt((sq - seeds * mean * mean) / (seeds - 1));
  EXPECT_NEAR(mean, 0.3 * T * 3.0 / 4.0, 3 * sd / std::sqrt(double(seeds)) + 1e-9);
}

TEST(Config, Validation) {
  auto c = config(10);
  c.tau1 = 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = config(10);
  c.delta = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = config(0);
  EXPECT_THROW(c.validate(), InvalidArgument);
}
