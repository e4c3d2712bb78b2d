#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>

#include "rdmdp/encoder.hpp"
#include "rdmdp/nn.hpp"
#include "rdmdp/types.hpp"

namespace rdmdp {

/// Discrete stochastic policy. Looks up a full augmented-state row first and
/// falls back to a row indexed by the (tabular) observation.
struct TabularPolicy {
  int num_actions = 0;
  std::vector<Vector> per_obs;
  std::unordered_map<StateKey, Vector, StateKeyHash> per_state;

  const Vector& probs(const AugmentedState& x) const;
  /// Throws std::invalid_argument unless every row is a distribution within 1e-12.
  void validate() const;

  static TabularPolicy uniform(int num_states, int num_actions);
  /// Every observation maps to the same deterministic action.
  static TabularPolicy always(int num_states, int num_actions, int action);
};

/// Point mass on one action regardless of the state.
struct ConstantPolicy {
  Action action;
};

/// Uniform over the action space ([-1, 1]^d or all indices).
struct UniformPolicy {
  ActionSpace space;
};

/// tanh-squashed diagonal Gaussian whose mean and log-std come from an MLP over
/// the encoded augmented state. The network output is [mean | log_std].
struct GaussianMlpPolicy {
  std::shared_ptr<nn::Mlp> net;
  Encoder encoder;
  double log_std_min = nn::kLogStdMin;
  double log_std_max = nn::kLogStdMax;

  std::size_t action_dim() const { return encoder.action_space.size; }
  /// Pre-squash mean and clamped log-std for one state.
  std::pair<Vector, Vector> head(const AugmentedState& x) const;
};

struct Policy {
  std::variant<TabularPolicy, ConstantPolicy, UniformPolicy, GaussianMlpPolicy> impl;
  std::string id = "policy";
};

struct PolicySample {
  Action action;
  double log_prob = 0.0;
};

/// a ~ pi(.|x) together with log pi(a|x). Throws std::invalid_argument for a
/// malformed state.
PolicySample policy_sample(const Policy& pi, const AugmentedState& x, Rng& rng);

/// log pi(a|x); -infinity where the policy puts no mass.
double policy_log_prob(const Policy& pi, const AugmentedState& x, const Action& a);

/// Deterministic action used for evaluation (mode / squashed mean).
Action policy_mode(const Policy& pi, const AugmentedState& x);

/// Action probabilities of a discrete policy (tabular, constant or uniform).
Vector policy_probs(const Policy& pi, const AugmentedState& x, int num_actions);

}  // namespace rdmdp
