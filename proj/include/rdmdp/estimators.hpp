#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "rdmdp/encoder.hpp"
#include "rdmdp/policy.hpp"
#include "rdmdp/resampling.hpp"

namespace rdmdp {

enum class ValueKind { tabular, mlp, constant };

/// State-value approximator v0 over augmented states, optionally shifted by a
/// constant bias (used to measure how bias propagates through the estimators).
class ValueFunction {
 public:
  static ValueFunction tabular(std::unordered_map<StateKey, double, StateKeyHash> table);
  static ValueFunction mlp(std::shared_ptr<const nn::Mlp> net, Encoder encoder);
  static ValueFunction constant(double value);
  ValueFunction with_bias(double bias) const;

  ValueKind kind() const { return kind_; }
  double bias() const { return bias_; }
  /// Tabular lookups of unknown states throw std::out_of_range.
  double operator()(const AugmentedState& x) const;

 private:
  ValueKind kind_ = ValueKind::constant;
  std::shared_ptr<const std::unordered_map<StateKey, double, StateKeyHash>> table_;
  std::shared_ptr<const nn::Mlp> net_;
  Encoder encoder_;
  double value_ = 0.0;
  double bias_ = 0.0;
};

struct EstimateReport {
  double estimate = 0.0;
  std::size_t n_used = 0;
  /// -entropy_scale * gamma^i * log pi(a_i | x*_i), one per resampled action.
  std::vector<double> entropy_terms;
  double gamma = 1.0;
};

/// sum_{i=1..n} gamma^{i-1} r_i + gamma^n v0(x_n), with a zero tail after a terminal.
double v_hat_n(const AugmentedState& x0, const ValidSubTrajectory& fragment, const ValueFunction& v0, double gamma);

/// v_hat_n minus entropy_scale * sum_i gamma^i log pi(a_i | x*_i).
/// Throws std::invalid_argument when log_probs.size() != n.
EstimateReport v_hat_soft_n(const AugmentedState& x0, const ValidSubTrajectory& fragment,
                            const std::vector<double>& log_probs, const ValueFunction& v0, double gamma,
                            double entropy_scale);

using ActionValueFn = std::function<double(const AugmentedState&, const Action&)>;

/// reward + gamma * q0(successor, a') with a single a' ~ pi(.|successor).
double q_hat_1(const AugmentedState& x, const Action& a, const AugmentedState& successor, double reward, bool terminal,
               const ActionValueFn& q0, const Policy& pi, double gamma, Rng& rng);

/// Same with the exact expectation over a discrete policy.
double q_hat_1_exact(const AugmentedState& x, const Action& a, const AugmentedState& successor, double reward,
                     bool terminal, const ActionValueFn& q0, const Policy& pi, int num_actions, double gamma);

}  // namespace rdmdp
