#include "modigw/models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>

namespace modigw {

FeatureTable::FeatureTable(std::size_t contexts, std::size_t arms, std::size_t dim,
                           std::vector<double> values)
    : contexts_(contexts), arms_(arms), dim_(dim), values_(std::move(values)) {
  if (values_.size() != contexts * arms * dim) {
    throw InvalidArgument("feature table has " + std::to_string(values_.size()) +
                          " entries, expected " + std::to_string(contexts * arms * dim));
  }
}

FittedModel::FittedModel(std::size_t class_index, std::vector<double> parameters,
                         ArmTable predictions)
    : class_index_(class_index),
      parameters_(std::move(parameters)),
      predictions_(std::move(predictions)) {}

FittedModel FittedModel::constant(std::size_t contexts, std::size_t arms, double value) {
  return FittedModel(0, {value}, ArmTable(contexts, arms, value));
}

ModelClass ModelClass::tabular(std::size_t contexts, std::size_t arms,
                               std::vector<std::size_t> groups) {
  if (contexts == 0 || arms == 0) throw InvalidArgument("tabular class needs a nonempty space");
  if (groups.size() != contexts * arms) {
    throw InvalidArgument("tabular class: group table size mismatch");
  }
  // Relabel part ids densely in order of first appearance.
  std::unordered_map<std::size_t, std::size_t> relabel;
  for (auto& g : groups) {
    auto [it, inserted] = relabel.try_emplace(g, relabel.size());
    g = it->second;
  }
  ModelClass c;
  c.kind_ = ClassKind::tabular;
  c.contexts_ = contexts;
  c.arms_ = arms;
  c.dim_ = relabel.size();
  c.groups_ = std::move(groups);
  return c;
}

ModelClass ModelClass::tabular_full(std::size_t contexts, std::size_t arms) {
  std::vector<std::size_t> groups(contexts * arms);
  std::iota(groups.begin(), groups.end(), std::size_t{0});
  return tabular(contexts, arms, std::move(groups));
}

ModelClass ModelClass::tabular_per_arm(std::size_t contexts, std::size_t arms) {
  std::vector<std::size_t> groups(contexts * arms);
  for (std::size_t x = 0; x < contexts; ++x)
    for (std::size_t a = 0; a < arms; ++a) groups[x * arms + a] = a;
  return tabular(contexts, arms, std::move(groups));
}

ModelClass ModelClass::tabular_constant(std::size_t contexts, std::size_t arms) {
  return tabular(contexts, arms, std::vector<std::size_t>(contexts * arms, 0));
}

ModelClass ModelClass::tabular_context_groups(std::size_t arms,
                                              const std::vector<std::size_t>& context_groups) {
  const std::size_t contexts = context_groups.size();
  std::vector<std::size_t> groups(contexts * arms);
  for (std::size_t x = 0; x < contexts; ++x)
    for (std::size_t a = 0; a < arms; ++a) groups[x * arms + a] = context_groups[x] * arms + a;
  return tabular(contexts, arms, std::move(groups));
}

ModelClass ModelClass::linear(std::shared_ptr<const FeatureTable> features, std::size_t dim) {
  if (!features) throw InvalidArgument("linear class requires a feature table");
  if (dim == 0 || dim > features->dim()) {
    throw InvalidArgument("linear class dimension " + std::to_string(dim) +
                          " outside feature table width " + std::to_string(features->dim()));
  }
  ModelClass c;
  c.kind_ = ClassKind::linear;
  c.contexts_ = features->num_contexts();
  c.arms_ = features->num_arms();
  c.dim_ = dim;
  c.features_ = std::move(features);
  return c;
}

namespace {

// Weighted least squares over cells: (Phi' W Phi + ridge I) beta = Phi' W y.
Eigen::VectorXd solve_linear(const ModelClass& cls, const ArmTable& targets,
                             const ArmTable& weights, double ridge, bool min_norm) {
  const std::size_t d = cls.dim();
  const std::size_t cells = cls.num_contexts() * cls.num_arms();
  const auto& table = cls.feature_table();
  if (min_norm) {
    Eigen::MatrixXd design(cells, d);
    Eigen::VectorXd rhs(cells);
    std::size_t row = 0;
    for (std::size_t x = 0; x < cls.num_contexts(); ++x) {
      for (std::size_t a = 0; a < cls.num_arms(); ++a, ++row) {
        const double s = std::sqrt(std::max(0.0, weights(x, a)));
        auto phi = table.features(x, a);
        for (std::size_t k = 0; k < d; ++k) design(row, k) = s * phi[k];
        rhs(row) = s * targets(x, a);
      }
    }
    return design.completeOrthogonalDecomposition().solve(rhs);
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd moment = Eigen::VectorXd::Zero(d);
  for (std::size_t x = 0; x < cls.num_contexts(); ++x) {
    for (std::size_t a = 0; a < cls.num_arms(); ++a) {
      const double w = weights(x, a);
      if (w <= 0.0) continue;
      Eigen::Map<const Eigen::VectorXd> phi(table.features(x, a).data(),
                                            static_cast<Eigen::Index>(d));
      gram.noalias() += w * phi * phi.transpose();
      moment.noalias() += w * targets(x, a) * phi;
    }
  }
  gram.diagonal().array() += ridge;
  return gram.ldlt().solve(moment);
}

ArmTable linear_predictions(const ModelClass& cls, const Eigen::VectorXd& beta) {
  ArmTable out(cls.num_contexts(), cls.num_arms());
  const auto& table = cls.feature_table();
  for (std::size_t x = 0; x < cls.num_contexts(); ++x) {
    for (std::size_t a = 0; a < cls.num_arms(); ++a) {
      auto phi = table.features(x, a);
      double v = 0.0;
      for (std::size_t k = 0; k < cls.dim(); ++k) v += phi[k] * beta(static_cast<Eigen::Index>(k));
      out(x, a) = v;
    }
  }
  return out;
}

}  // namespace

FittedModel ModelClass::fit_weighted(const ArmTable& targets, const ArmTable& weights,
                                     std::size_t class_index, double ridge,
                                     double empty_value) const {
  if (kind_ == ClassKind::tabular) {
    std::vector<double> weight_sum(dim_, 0.0);
    std::vector<double> value_sum(dim_, 0.0);
    for (std::size_t x = 0; x < contexts_; ++x) {
      for (std::size_t a = 0; a < arms_; ++a) {
        const std::size_t g = group_of(x, a);
        weight_sum[g] += weights(x, a);
        value_sum[g] += weights(x, a) * targets(x, a);
      }
    }
    std::vector<double> params(dim_, empty_value);
    for (std::size_t g = 0; g < dim_; ++g) {
      if (weight_sum[g] > 0.0) params[g] = std::clamp(value_sum[g] / weight_sum[g], 0.0, 1.0);
    }
    ArmTable predictions(contexts_, arms_);
    for (std::size_t x = 0; x < contexts_; ++x)
      for (std::size_t a = 0; a < arms_; ++a) predictions(x, a) = params[group_of(x, a)];
    return FittedModel(class_index, std::move(params), std::move(predictions));
  }

  const Eigen::VectorXd beta = solve_linear(*this, targets, weights, ridge, false);
  ArmTable predictions = linear_predictions(*this, beta);
  for (std::size_t x = 0; x < contexts_; ++x)
    for (std::size_t a = 0; a < arms_; ++a)
      predictions(x, a) = std::clamp(predictions(x, a), 0.0, 1.0);
  return FittedModel(class_index, std::vector<double>(beta.data(), beta.data() + beta.size()),
                     std::move(predictions));
}

ArmTable ModelClass::project(const ArmTable& target, const ArmTable& weights) const {
  if (kind_ == ClassKind::linear) {
    return linear_predictions(*this, solve_linear(*this, target, weights, 0.0, true));
  }
  std::vector<double> weight_sum(dim_, 0.0);
  std::vector<double> value_sum(dim_, 0.0);
  std::vector<double> plain_sum(dim_, 0.0);
  std::vector<double> count(dim_, 0.0);
  for (std::size_t x = 0; x < contexts_; ++x) {
    for (std::size_t a = 0; a < arms_; ++a) {
      const std::size_t g = group_of(x, a);
      weight_sum[g] += weights(x, a);
      value_sum[g] += weights(x, a) * target(x, a);
      plain_sum[g] += target(x, a);
      count[g] += 1.0;
    }
  }
  std::vector<double> value(dim_);
  for (std::size_t g = 0; g < dim_; ++g) {
    value[g] = weight_sum[g] > 0.0 ? value_sum[g] / weight_sum[g] : plain_sum[g] / count[g];
  }
  ArmTable out(contexts_, arms_);
  for (std::size_t x = 0; x < contexts_; ++x)
    for (std::size_t a = 0; a < arms_; ++a) out(x, a) = value[group_of(x, a)];
  return out;
}

bool ModelClass::is_refined_by(const ModelClass& finer) const {
  if (finer.contexts_ != contexts_ || finer.arms_ != arms_) return false;
  if (kind_ != finer.kind_) return false;
  if (kind_ == ClassKind::linear) {
    return features_ == finer.features_ && finer.dim_ >= dim_;
  }
  std::vector<std::size_t> coarse_of(finer.dim_, kUnbounded);
  for (std::size_t cell = 0; cell < groups_.size(); ++cell) {
    std::size_t& slot = coarse_of[finer.groups_[cell]];
    if (slot == kUnbounded) {
      slot = groups_[cell];
    } else if (slot != groups_[cell]) {
      return false;
    }
  }
  return true;
}

void validate_class_sequence(std::span<const ModelClass> classes) {
  if (classes.empty()) throw InvalidArgument("class sequence is empty");
  for (std::size_t i = 1; i < classes.size(); ++i) {
    const auto& prev = classes[i - 1];
    const auto& cur = classes[i];
    if (cur.num_contexts() != prev.num_contexts() || cur.num_arms() != prev.num_arms()) {
      throw InvalidArgument("class " + std::to_string(i + 1) +
                            " is defined over a different (context, arm) space");
    }
    if (cur.dim() < prev.dim()) {
      throw InvalidArgument("class dimensions must be non-decreasing: d_" + std::to_string(i) +
                            "=" + std::to_string(prev.dim()) + " > d_" + std::to_string(i + 1) +
                            "=" + std::to_string(cur.dim()));
    }
    // Nesting is only checkable between classes of the same kind.
    if (cur.kind() == prev.kind() && !prev.is_refined_by(cur)) {
      throw InvalidArgument("class " + std::to_string(i + 1) + " does not contain class " +
                            std::to_string(i));
    }
  }
}

RateFunction RateFunction::parametric(double c1) {
  if (!(c1 > 0.0)) throw InvalidArgument("rate constant C1 must be positive");
  return RateFunction([c1](double dim, double n, double zeta) {
    const double m = std::max(n, 2.0);
    return c1 * dim * std::log(m) * std::log(1.0 / zeta) / m;
  });
}

RateFunction RateFunction::mean_estimation() {
  return RateFunction([](double, double n, double zeta) {
    return std::log(1.0 / zeta) / std::max(n, 1.0);
  });
}

RateValidity check_rate_validity(const RateFunction& rate, std::span<const double> dims,
                                 std::span<const double> zetas, std::size_t n_max) {
  RateValidity out;
  out.monotone_from = 2;
  out.ratio_at_least_one = true;
  out.ratio_non_increasing = true;
  constexpr double kSlack = 1e-12;
  for (double zeta : zetas) {
    for (std::size_t i = 0; i < dims.size(); ++i) {
      double prev = std::numeric_limits<double>::infinity();
      double prev_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t n = 2; n <= n_max; ++n) {
        const double nn = static_cast<double>(n);
        const double z = zeta / std::log(nn);
        const double v = rate(dims[i], nn, z);
        if (v > prev * (1.0 + kSlack)) out.monotone_from = std::max(out.monotone_from, n);
        prev = v;
        if (i > 0) {
          const double ratio = v / rate(dims[i - 1], nn, z);
          if (ratio < 1.0 - kSlack) out.ratio_at_least_one = false;
          if (ratio > prev_ratio * (1.0 + kSlack)) out.ratio_non_increasing = false;
          prev_ratio = ratio;
        }
      }
    }
  }
  return out;
}

namespace {

struct CellStats {
  ArmTable means;
  ArmTable counts;
};

CellStats cell_stats(std::size_t contexts, std::size_t arms, std::span<const Sample> data) {
  CellStats s{ArmTable(contexts, arms), ArmTable(contexts, arms)};
  for (const auto& smp : data) {
    if (smp.context >= contexts || smp.action >= arms) {
      throw InvalidArgument("sample outside the class's (context, arm) space");
    }
    s.means(smp.context, smp.action) += smp.reward;
    s.counts(smp.context, smp.action) += 1.0;
  }
  for (std::size_t x = 0; x < contexts; ++x)
    for (std::size_t a = 0; a < arms; ++a)
      if (s.counts(x, a) > 0.0) s.means(x, a) /= s.counts(x, a);
  return s;
}

}  // namespace

FittedModel erm_fit(const ModelClass& model_class, std::span<const Sample> data,
                    std::size_t class_index, double ridge) {
  if (data.empty()) throw InvalidArgument("erm_fit: empty dataset");
  const auto stats = cell_stats(model_class.num_contexts(), model_class.num_arms(), data);
  return model_class.fit_weighted(stats.means, stats.counts, class_index, ridge, kEmptyCellValue);
}

double empirical_loss(std::span<const Sample> data, const FittedModel& model) {
  if (data.empty()) throw InvalidArgument("empirical_loss: empty dataset");
  double total = 0.0;
  for (const auto& s : data) {
    const double e = model.predict(s.context, s.action) - s.reward;
    total += e * e;
  }
  return total / static_cast<double>(data.size());
}

std::size_t oracle_train_size(std::size_t n, double split_ratio) {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw InvalidArgument("split ratio must lie in (0, 1)");
  }
  const auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * split_ratio));
  if (n < 2 || n_train == 0 || n_train >= n) {
    throw InvalidArgument("dataset of size " + std::to_string(n) +
                          " is too small for a training/validation split");
  }
  return n_train;
}

EstimationResult estimate(std::span<const ModelClass> classes, std::span<const Sample> data,
                          double split_ratio, double ridge) {
  if (classes.empty()) throw InvalidArgument("estimate: no candidate classes");
  const std::size_t n_train = oracle_train_size(data.size(), split_ratio);
  const auto train = data.first(n_train);
  const auto validation = data.subspan(n_train);

  EstimationResult out{FittedModel::constant(0, 0, 0.0), 0, {}, {}, n_train};
  for (std::size_t j = 0; j < classes.size(); ++j) {
    out.candidates.push_back(erm_fit(classes[j], train, j + 1, ridge));
    out.validation_losses.push_back(empirical_loss(validation, out.candidates.back()));
  }
  out.selected = select_prefix(out, classes.size());
  out.model = out.candidates[out.selected - 1];
  return out;
}

std::size_t select_prefix(const EstimationResult& result, std::size_t i) {
  if (i == 0 || i > result.validation_losses.size()) {
    throw InvalidArgument("select_prefix: index out of range");
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < i; ++j) {
    if (result.validation_losses[j] < result.validation_losses[best]) best = j;
  }
  return best + 1;
}

FittedModel est_oracle(std::span<const ModelClass> classes, std::span<const Sample> data,
                       double split_ratio, double ridge) {
  return estimate(classes, data, split_ratio, ridge).model;
}

}  // namespace modigw
