#include "modigw/mistest.hpp"

#include <cmath>
#include <string>

namespace modigw {

SplitSizes holdout_split(std::size_t n, double holdout_fraction) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw InvalidArgument("holdout fraction must lie in (0, 1)");
  }
  const auto holdout =
      static_cast<std::size_t>(std::ceil(holdout_fraction * static_cast<double>(n)));
  if (holdout == 0 || holdout >= n || n - holdout < 2) {
    throw InvalidArgument("cannot split " + std::to_string(n) +
                          " samples into a holdout and a training set of at least 2");
  }
  return {n - holdout, holdout};
}

Threshold test_threshold(const RateFunction& rate, double dim, std::size_t class_index,
                         std::size_t n_train, std::size_t n_holdout, double zeta) {
  if (class_index == 0) throw InvalidArgument("class index is 1-based");
  if (!(zeta > 0.0 && zeta < 1.0)) throw InvalidArgument("zeta must lie in (0, 1)");
  if (n_holdout == 0) throw InvalidArgument("empty holdout");
  Threshold t;
  t.rate_term = 4.0 * rate(dim, static_cast<double>(n_train),
                           zeta / (6.0 * static_cast<double>(class_index)));
  t.bernstein_term = (26.0 / 3.0) * std::log(6.0 / zeta) / static_cast<double>(n_holdout);
  return t;
}

std::vector<TestVerdict> run_tests(std::span<const Sample> data,
                                   std::span<const ModelClass> classes,
                                   std::span<const std::size_t> class_indices, double zeta,
                                   const RateFunction& rate, const MisTestConfig& config) {
  for (std::size_t i : class_indices) {
    if (i == 0 || i > classes.size()) {
      throw InvalidArgument("test class index " + std::to_string(i) + " outside [1, " +
                            std::to_string(classes.size()) + "]");
    }
  }
  const SplitSizes sizes = holdout_split(data.size(), config.holdout_fraction);
  const auto train = data.first(sizes.train);
  const auto holdout = data.subspan(sizes.train);

  const EstimationResult fits = estimate(classes, train, config.split_ratio, config.ridge);
  const double loss_full = empirical_loss(holdout, fits.model);

  std::vector<TestVerdict> verdicts;
  verdicts.reserve(class_indices.size());
  for (std::size_t i : class_indices) {
    const std::size_t selected = select_prefix(fits, i);
    const Threshold t = test_threshold(rate, static_cast<double>(classes[i - 1].dim()), i,
                                       sizes.train, sizes.holdout, zeta);
    TestVerdict v;
    v.class_index = i;
    v.lhs = selected == fits.selected ? loss_full
                                      : empirical_loss(holdout, fits.candidates[selected - 1]);
    v.loss_full = loss_full;
    v.rate_term = t.rate_term;
    v.bernstein_term = t.bernstein_term;
    v.n_train = sizes.train;
    v.n_holdout = sizes.holdout;
    v.zeta = zeta;
    v.misspecified = v.lhs > v.rhs();
    verdicts.push_back(v);
  }
  return verdicts;
}

TestVerdict run_test(std::span<const Sample> data, std::span<const ModelClass> classes,
                     std::size_t class_index, double zeta, const RateFunction& rate,
                     const MisTestConfig& config) {
  const std::size_t idx[] = {class_index};
  return run_tests(data, classes, idx, zeta, rate, config).front();
}

}  // namespace modigw
