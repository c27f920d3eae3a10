#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "modigw/types.hpp"

namespace modigw {

enum class ClassKind { tabular, linear };

// Per-(context, arm) feature vectors shared by a sequence of linear classes.
// A linear class of dimension d uses the first d coordinates.
class FeatureTable {
 public:
  FeatureTable(std::size_t contexts, std::size_t arms, std::size_t dim,
               std::vector<double> values);

  std::size_t num_contexts() const { return contexts_; }
  std::size_t num_arms() const { return arms_; }
  std::size_t dim() const { return dim_; }

  std::span<const double> features(ContextId x, Arm a) const {
    return {values_.data() + (x * arms_ + a) * dim_, dim_};
  }

 private:
  std::size_t contexts_;
  std::size_t arms_;
  std::size_t dim_;
  std::vector<double> values_;
};

// A fitted reward model. Predictions are stored for every (context, arm) and
// always lie in [0, 1].
class FittedModel {
 public:
  FittedModel(std::size_t class_index, std::vector<double> parameters,
              ArmTable predictions);

  // The constant model used before any data has been seen. Class index 0.
  static FittedModel constant(std::size_t contexts, std::size_t arms, double value);

  // 1-based index of the class that produced this model; 0 for the constant
  // initial model.
  std::size_t class_index() const { return class_index_; }
  std::span<const double> parameters() const { return parameters_; }
  const ArmTable& predictions() const { return predictions_; }
  double predict(ContextId x, Arm a) const { return predictions_(x, a); }

  friend bool operator==(const FittedModel&, const FittedModel&) = default;

 private:
  std::size_t class_index_;
  std::vector<double> parameters_;
  ArmTable predictions_;
};

// A hypothesis class over the finite (context, arm) space.
//
// Tabular classes are piecewise constant over a partition of the cells; their
// dimension is the number of parts. Linear classes are spans of a prefix of a
// shared feature table, with predictions clamped to [0, 1].
class ModelClass {
 public:
  // `groups[x * arms + a]` is the part that cell (x, a) belongs to. Part ids
  // must be dense in [0, parts).
  static ModelClass tabular(std::size_t contexts, std::size_t arms,
                            std::vector<std::size_t> groups);
  static ModelClass tabular_full(std::size_t contexts, std::size_t arms);
  static ModelClass tabular_per_arm(std::size_t contexts, std::size_t arms);
  static ModelClass tabular_constant(std::size_t contexts, std::size_t arms);
  // Cells (x, a) and (x', a) share a part iff context_groups[x] == context_groups[x'].
  static ModelClass tabular_context_groups(std::size_t arms,
                                           const std::vector<std::size_t>& context_groups);

  static ModelClass linear(std::shared_ptr<const FeatureTable> features, std::size_t dim);

  ClassKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t num_contexts() const { return contexts_; }
  std::size_t num_arms() const { return arms_; }

  // Tabular only.
  std::size_t group_of(ContextId x, Arm a) const { return groups_[x * arms_ + a]; }
  // Linear only.
  const FeatureTable& feature_table() const { return *features_; }

  // Least-squares fit on cell targets with nonnegative cell weights.
  // Tabular: weighted part means, parts with zero weight get `empty_value`.
  // Linear: ridge-damped normal equations, predictions clamped.
  FittedModel fit_weighted(const ArmTable& targets, const ArmTable& weights,
                           std::size_t class_index, double ridge,
                           double empty_value) const;

  // Exact weighted squared-loss projection of `target` onto the class, i.e.
  // the minimizer of sum w(x,a) (f(x,a) - target(x,a))^2. No clamping; for
  // linear classes this is the projection onto the linear span. Cells in
  // zero-weight tabular parts take the unweighted part mean.
  ArmTable project(const ArmTable& target, const ArmTable& weights) const;

  // True when every part of `finer` lies inside one part of this class
  // (tabular), or when `finer` extends this feature prefix (linear).
  bool is_refined_by(const ModelClass& finer) const;

 private:
  ModelClass() = default;

  ClassKind kind_ = ClassKind::tabular;
  std::size_t contexts_ = 0;
  std::size_t arms_ = 0;
  std::size_t dim_ = 0;
  std::vector<std::size_t> groups_;
  std::shared_ptr<const FeatureTable> features_;
};

// Checks d_1 <= ... <= d_M, matching (context, arm) spaces, and that each
// class refines its predecessor. Throws InvalidArgument otherwise.
void validate_class_sequence(std::span<const ModelClass> classes);

// Estimation rate xi(d, n, zeta). The shipped parametric rate is
// C1 * d * ln(n) * ln(1/zeta) / n, with n < 2 evaluated at n = 2.
class RateFunction {
 public:
  using Fn = std::function<double(double dim, double n, double zeta)>;

  explicit RateFunction(Fn fn) : fn_(std::move(fn)) {}

  static RateFunction parametric(double c1);
  // ln(1/zeta) / n: the rate for the mean of a bounded scalar.
  static RateFunction mean_estimation();

  double operator()(double dim, double n, double zeta) const { return fn_(dim, n, zeta); }

 private:
  Fn fn_;
};

// Result of checking the two rate-validity conditions on an integer grid.
struct RateValidity {
  // Smallest n0 such that xi_i(n, zeta / ln n) is non-increasing on [n0, n_max]
  // for every configured class and every zeta checked.
  std::size_t monotone_from = 0;
  // xi_i / xi_{i-1} >= 1 for every consecutive configured pair (i >= 2).
  bool ratio_at_least_one = false;
  // xi_i / xi_{i-1} non-increasing in n for every consecutive pair (i >= 2).
  bool ratio_non_increasing = false;
};

RateValidity check_rate_validity(const RateFunction& rate, std::span<const double> dims,
                                 std::span<const double> zetas, std::size_t n_max);

inline constexpr double kDefaultRidge = 1e-8;
inline constexpr double kEmptyCellValue = 0.5;

// Empirical risk minimizer of squared loss over the class.
FittedModel erm_fit(const ModelClass& model_class, std::span<const Sample> data,
                    std::size_t class_index, double ridge = kDefaultRidge);

// Mean squared error (1/|S|) sum (f(x,a) - r)^2.
double empirical_loss(std::span<const Sample> data, const FittedModel& model);

// Training/validation ERM over a prefix of the class sequence.
struct EstimationResult {
  FittedModel model;
  // 1-based index of the selected class.
  std::size_t selected = 0;
  std::vector<double> validation_losses;
  // Per-class ERM fits on the training split, in class order.
  std::vector<FittedModel> candidates;
  std::size_t train_size = 0;
};

// Index (1-based) that the oracle restricted to classes 1..i would select from
// an existing result. Equivalent to rerunning estimate() on the prefix.
std::size_t select_prefix(const EstimationResult& result, std::size_t i);

// Number of training samples for a split; throws when either side is empty.
std::size_t oracle_train_size(std::size_t n, double split_ratio);

// Fits each of `classes` on the first ceil(n * split_ratio) samples and
// returns the candidate with the smallest loss on the rest. Ties go to the
// smallest class index.
EstimationResult estimate(std::span<const ModelClass> classes, std::span<const Sample> data,
                          double split_ratio = 0.5, double ridge = kDefaultRidge);

// Convenience wrapper returning only the selected model.
FittedModel est_oracle(std::span<const ModelClass> classes, std::span<const Sample> data,
                       double split_ratio = 0.5, double ridge = kDefaultRidge);

}  // namespace modigw
