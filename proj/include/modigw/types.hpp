#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace modigw {

using ContextId = std::size_t;
using Arm = std::size_t;

// Sentinel for "never" / "unbounded" epoch and round indices.
inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

// Thrown for malformed inputs: bad configs, empty datasets, infeasible splits.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a runtime invariant of the algorithm is violated.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Dense table indexed by (context, arm), stored row-major. Used for the true
// reward model, fitted predictions, and action-selection kernels alike.
class ArmTable {
 public:
  ArmTable() = default;
  ArmTable(std::size_t contexts, std::size_t arms, double fill = 0.0)
      : contexts_(contexts), arms_(arms), values_(contexts * arms, fill) {}

  std::size_t num_contexts() const { return contexts_; }
  std::size_t num_arms() const { return arms_; }

  double operator()(ContextId x, Arm a) const { return values_[x * arms_ + a]; }
  double& operator()(ContextId x, Arm a) { return values_[x * arms_ + a]; }

  std::span<const double> row(ContextId x) const {
    return {values_.data() + x * arms_, arms_};
  }
  std::span<double> row(ContextId x) { return {values_.data() + x * arms_, arms_}; }

  std::span<const double> values() const { return values_; }

  friend bool operator==(const ArmTable&, const ArmTable&) = default;

 private:
  std::size_t contexts_ = 0;
  std::size_t arms_ = 0;
  std::vector<double> values_;
};

// One observed interaction: context, played arm, realized reward in [0, 1].
struct Sample {
  ContextId context = 0;
  Arm action = 0;
  double reward = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

using Dataset = std::vector<Sample>;

}  // namespace modigw
