#include "modigw/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace modigw {

void RunConfig::validate() const {
  if (horizon == 0) throw InvalidArgument("horizon T must be positive");
  if (tau1 < 2) throw InvalidArgument("tau1 must be at least 2");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(c0 >= 1.0)) throw InvalidArgument("C0 must be at least 1");
  if (!(c1 > 0.0)) throw InvalidArgument("C1 must be positive");
  if (!(test.holdout_fraction > 0.0 && test.holdout_fraction < 1.0)) {
    throw InvalidArgument("holdout fraction must lie in (0, 1)");
  }
  if (!(test.split_ratio > 0.0 && test.split_ratio < 1.0)) {
    throw InvalidArgument("split ratio must lie in (0, 1)");
  }
  if (!(test.ridge >= 0.0)) throw InvalidArgument("ridge must be nonnegative");
}

double epoch_confidence(double delta, std::size_t num_classes, std::size_t m) {
  const double md = static_cast<double>(m);
  return delta / (4.0 * static_cast<double>(num_classes) * md * md);
}

double exploration_gamma(const RateFunction& rate, double dim, std::size_t completed_epoch,
                         std::size_t num_arms, double delta, std::size_t num_classes,
                         std::size_t tau1) {
  if (completed_epoch == 0) throw InvalidArgument("exploration_gamma needs a completed epoch");
  const double n = epoch_length(completed_epoch, tau1);
  const double xi = rate(dim, n, epoch_confidence(delta, num_classes, completed_epoch));
  return std::sqrt(static_cast<double>(num_arms) / (8.0 * xi));
}

Rng environment_stream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0u};
  return Rng(seq);
}

Rng learner_stream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    1u};
  return Rng(seq);
}

ModIgw::ModIgw(std::vector<ModelClass> classes, RunConfig config)
    : classes_(std::move(classes)), config_(config) {
  validate_class_sequence(classes_);
  config_.validate();
  const std::size_t contexts = classes_.front().num_contexts();
  const std::size_t arms = classes_.front().num_arms();
  state_.m = 1;
  state_.tau_prev = 0;
  state_.tau_cur = config_.tau1;
  state_.index_set.resize(classes_.size());
  for (std::size_t i = 0; i < classes_.size(); ++i) state_.index_set[i] = i + 1;
  state_.active_index = 1;
  state_.gamma = 1.0;
  state_.model = FittedModel::constant(contexts, arms, 0.0);
  refresh_kernel();
}

void ModIgw::refresh_kernel() { probs_ = ActionKernel(state_.model, state_.gamma).table(); }

std::vector<RoundRecord> ModIgw::run_epoch(const Environment& env, Rng& env_rng,
                                           Rng& learner_rng) {
  if (env.num_contexts() != probs_.num_contexts() || env.num_arms() != probs_.num_arms()) {
    throw InvalidArgument("environment does not match the class sequence's space");
  }
  const std::size_t last = std::min(state_.tau_cur, config_.horizon);
  std::vector<RoundRecord> log;
  log.reserve(last > played_ ? last - played_ : 0);
  for (std::size_t t = state_.tau_prev + 1; t <= last; ++t) {
    const Round round = env.sample_round(env_rng);
    const Arm action = sample_discrete(probs_.row(round.context), learner_rng);
    const double reward = round.rewards[action];
    state_.data.push_back({round.context, action, reward});
    log.push_back({t, state_.m, round.context, action, reward,
                   env.instant_regret(round.context, action), state_.gamma, state_.active_index});
  }
  played_ = last;
  return log;
}

EpochRecord ModIgw::end_of_epoch_update() {
  if (played_ < state_.tau_cur) {
    throw InvariantViolation("end_of_epoch_update called before epoch " +
                             std::to_string(state_.m) + " completed");
  }
  const std::size_t num_classes = classes_.size();
  const std::size_t m = state_.m;

  std::span<const Sample> data = state_.data;
  if (config_.cumulative_data) {
    history_.insert(history_.end(), state_.data.begin(), state_.data.end());
    data = history_;
  }

  EpochRecord rec;
  rec.epoch = m;
  rec.tau_end = state_.tau_cur;
  rec.samples = data.size();
  rec.zeta = epoch_confidence(config_.delta, num_classes, m);

  const EstimationResult fit = estimate(classes_, data, config_.test.split_ratio,
                                        config_.test.ridge);
  rec.model_class = fit.selected;

  std::vector<std::size_t> survivors;
  bool splittable = true;
  try {
    holdout_split(data.size(), config_.test.holdout_fraction);
  } catch (const InvalidArgument&) {
    splittable = false;
  }
  if (splittable) {
    rec.verdicts = run_tests(data, classes_, state_.index_set, rec.zeta, config_.rate(),
                             config_.test);
    for (const auto& v : rec.verdicts) {
      if (!v.misspecified) survivors.push_back(v.class_index);
    }
  } else {
    rec.tests_skipped = true;
    survivors = state_.index_set;
  }
  if (survivors.empty()) {
    throw InvariantViolation("index set became empty after epoch " + std::to_string(m));
  }

  state_.index_set = std::move(survivors);
  state_.active_index = state_.index_set.front();
  state_.gamma = exploration_gamma(config_.rate(),
                                   static_cast<double>(classes_[state_.active_index - 1].dim()),
                                   m, classes_.front().num_arms(), config_.delta, num_classes,
                                   config_.tau1);
  state_.model = fit.model;
  state_.m = m + 1;
  state_.tau_prev = state_.tau_cur;
  state_.tau_cur = 2 * state_.tau_cur;
  state_.data.clear();
  refresh_kernel();

  rec.index_set = state_.index_set;
  rec.active_index = state_.active_index;
  rec.gamma = state_.gamma;
  return rec;
}

RunLog run_mod_igw(const Environment& env, std::vector<ModelClass> classes,
                   const RunConfig& config) {
  ModIgw learner(std::move(classes), config);
  Rng env_rng = environment_stream(config.seed);
  Rng learner_rng = learner_stream(config.seed);
  RunLog log;
  log.rounds.reserve(config.horizon);
  while (true) {
    auto rounds = learner.run_epoch(env, env_rng, learner_rng);
    log.rounds.insert(log.rounds.end(), rounds.begin(), rounds.end());
    if (learner.finished()) break;
    log.epochs.push_back(learner.end_of_epoch_update());
  }
  return log;
}

RunLog run_fixed_class_igw(const Environment& env, std::span<const ModelClass> classes,
                           std::size_t class_index, const RunConfig& config) {
  if (class_index == 0 || class_index > classes.size()) {
    throw InvalidArgument("fixed class index " + std::to_string(class_index) + " out of range");
  }
  return run_mod_igw(env, {classes[class_index - 1]}, config);
}

RunLog run_uniform_random(const Environment& env, const RunConfig& config) {
  config.validate();
  Rng env_rng = environment_stream(config.seed);
  Rng learner_rng = learner_stream(config.seed);
  const std::vector<double> uniform(env.num_arms(), 1.0 / static_cast<double>(env.num_arms()));
  RunLog log;
  log.rounds.reserve(config.horizon);
  std::size_t epoch = 1;
  std::size_t tau = config.tau1;
  for (std::size_t t = 1; t <= config.horizon; ++t) {
    if (t > tau) {
      EpochRecord rec;
      rec.epoch = epoch;
      rec.tau_end = tau;
      log.epochs.push_back(rec);
      ++epoch;
      tau *= 2;
    }
    const Round round = env.sample_round(env_rng);
    const Arm action = sample_discrete(uniform, learner_rng);
    log.rounds.push_back({t, epoch, round.context, action, round.rewards[action],
                          env.instant_regret(round.context, action), 0.0, 0});
  }
  return log;
}

}  // namespace modigw
