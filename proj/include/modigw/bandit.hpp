#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "modigw/env.hpp"
#include "modigw/igw.hpp"
#include "modigw/mistest.hpp"
#include "modigw/models.hpp"
#include "modigw/random.hpp"

namespace modigw {

struct RunConfig {
  std::size_t horizon = 0;  // T; the last epoch is truncated at T
  std::size_t tau1 = 2;     // first epoch length, >= 2
  double delta = 0.1;
  double c0 = 1.0;
  double c1 = 1.0;
  MisTestConfig test;
  // Fit on all data seen so far instead of the last epoch only.
  bool cumulative_data = false;
  std::uint64_t seed = 0;

  RateFunction rate() const { return RateFunction::parametric(c1); }
  void validate() const;
};

// Confidence handed to the estimation and test oracles after epoch m:
// delta / (4 M m^2).
double epoch_confidence(double delta, std::size_t num_classes, std::size_t m);

// Exploration parameter for class i after completing epoch m (used in epoch
// m + 1): sqrt(K / (8 xi_i(tau_m - tau_{m-1}, delta / (4 M m^2)))).
double exploration_gamma(const RateFunction& rate, double dim, std::size_t completed_epoch,
                         std::size_t num_arms, double delta, std::size_t num_classes,
                         std::size_t tau1);

struct RoundRecord {
  std::size_t t = 0;
  std::size_t epoch = 0;
  ContextId context = 0;
  Arm action = 0;
  double reward = 0.0;
  double regret = 0.0;  // expected: f*(x, pi*(x)) - f*(x, a)
  double gamma = 0.0;
  std::size_t active_index = 0;  // i_m

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

// State transition at the end of an epoch.
struct EpochRecord {
  std::size_t epoch = 0;    // completed epoch m
  std::size_t tau_end = 0;  // tau_m
  std::size_t samples = 0;
  std::vector<std::size_t> index_set;  // I_{m+1}
  std::size_t active_index = 0;        // i_{m+1}
  double gamma = 0.0;                  // gamma_{m+1}
  std::size_t model_class = 0;         // class behind f_{m+1}
  double zeta = 0.0;
  // Epoch too short to split for the test; every index was kept.
  bool tests_skipped = false;
  std::vector<TestVerdict> verdicts;
};

struct EpochState {
  std::size_t m = 1;
  std::size_t tau_prev = 0;
  std::size_t tau_cur = 0;
  std::vector<std::size_t> index_set;
  std::size_t active_index = 1;
  double gamma = 1.0;
  FittedModel model = FittedModel::constant(0, 0, 0.0);
  Dataset data;
};

// Epoch-doubling inverse-gap-weighting learner with model selection.
//
// Each epoch plays the IGW kernel built from the current model and gamma.
// At the end of the epoch the estimation oracle over all classes is refit on
// the epoch's data, every surviving class index is re-tested for
// misspecification, and gamma is reset from the smallest survivor.
class ModIgw {
 public:
  ModIgw(std::vector<ModelClass> classes, RunConfig config);

  const EpochState& state() const { return state_; }
  const RunConfig& config() const { return config_; }
  std::span<const ModelClass> classes() const { return classes_; }
  // Rounds played so far.
  std::size_t rounds_played() const { return played_; }
  bool finished() const { return played_ >= config_.horizon; }

  // Plays rounds tau_{m-1}+1 .. min(tau_m, T) of the current epoch. The
  // environment consumes only `env_rng`; arm draws consume only `learner_rng`.
  std::vector<RoundRecord> run_epoch(const Environment& env, Rng& env_rng, Rng& learner_rng);

  // Refits, re-tests, and moves to epoch m + 1.
  EpochRecord end_of_epoch_update();

 private:
  void refresh_kernel();

  std::vector<ModelClass> classes_;
  RunConfig config_;
  EpochState state_;
  KernelTable probs_;
  Dataset history_;
  std::size_t played_ = 0;
};

struct RunLog {
  std::vector<RoundRecord> rounds;
  std::vector<EpochRecord> epochs;
};

// Independent environment and learner streams derived from one seed, so that
// different algorithms see identical contexts and rewards under one seed.
Rng environment_stream(std::uint64_t seed);
Rng learner_stream(std::uint64_t seed);

RunLog run_mod_igw(const Environment& env, std::vector<ModelClass> classes,
                   const RunConfig& config);

// IGW on a single class: Mod-IGW with the sequence reduced to {F_i}.
RunLog run_fixed_class_igw(const Environment& env, std::span<const ModelClass> classes,
                           std::size_t class_index, const RunConfig& config);

// Uniformly random arms. Epoch markers follow the same doubling schedule.
RunLog run_uniform_random(const Environment& env, const RunConfig& config);

}  // namespace modigw
