#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rdmdp/rng.hpp"

namespace rdmdp {

using Vector = std::vector<double>;

/// Observations and actions are real vectors. Discrete actions and tabular states
/// are stored as a one-element vector holding the index.
using Observation = Vector;
using Action = Vector;

inline Action discrete_action(int index) { return Action{static_cast<double>(index)}; }
int action_index(const Action& a);
int observation_index(const Observation& s);

enum class ActionKind { discrete, continuous };

struct ActionSpace {
  ActionKind kind = ActionKind::discrete;
  /// Number of actions (discrete) or dimension of [-1, 1]^d (continuous).
  std::size_t size = 0;

  /// Zero vector or action index 0.
  Action null_action() const;
  bool contains(const Action& a) const;
};

/// Fixed-length list of the last K sent actions. Entry 1 is the most recent and
/// entry K the oldest; pushing drops the oldest.
class ActionBuffer {
 public:
  ActionBuffer() = default;
  ActionBuffer(std::size_t capacity, const Action& fill);
  explicit ActionBuffer(std::vector<Action> newest_first);

  std::size_t capacity() const { return entries_.size(); }
  /// 1-based access, i in [1, K].
  const Action& operator[](std::size_t i) const;
  const std::vector<Action>& entries() const { return entries_; }

  ActionBuffer pushed(const Action& a) const;
  void push(const Action& a);

  friend bool operator==(const ActionBuffer&, const ActionBuffer&) = default;

 private:
  std::vector<Action> entries_;
};

/// Buffer transition p_u: the new action goes in front, the oldest is dropped.
ActionBuffer buffer_push(const ActionBuffer& u, const Action& a);

/// Augmented state <s, u, alpha, beta> with the optional kappa side-input.
struct AugmentedState {
  Observation obs;
  ActionBuffer buffer;
  int obs_delay = 0;  // alpha
  int act_delay = 1;  // beta
  std::optional<int> kappa;

  /// Throws std::invalid_argument unless 0 <= alpha <= max_alpha,
  /// 1 <= beta <= max_beta, alpha + beta <= K and 0 <= kappa <= beta.
  void validate(int max_alpha, int max_beta) const;
  /// Same checks with the maxima only bounded through K.
  void validate() const;

  friend bool operator==(const AugmentedState&, const AugmentedState&) = default;
};

/// Dense integer key of a fully discrete augmented state: (s, u[1..K], alpha, beta).
struct StateKey {
  std::vector<int> fields;
  friend bool operator==(const StateKey&, const StateKey&) = default;
  friend auto operator<=>(const StateKey&, const StateKey&) = default;
};

StateKey state_key(const AugmentedState& x);

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const noexcept;
};

struct EnvStep {
  Observation next_observation;
  double reward = 0.0;
  bool terminal = false;
};

/// An undelayed environment as a Markov model over fully observed states. The
/// model is stateless: the delay machinery advances it from arbitrary (delayed)
/// observations, so implementations must not keep hidden per-episode state.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual ActionSpace action_space() const = 0;
  virtual std::size_t observation_dim() const = 0;
  virtual Observation reset(Rng& rng) const = 0;
  virtual EnvStep step(const Observation& s, const Action& a, Rng& rng) const = 0;
  /// Episode time limit in steps; 0 means unbounded.
  virtual std::size_t horizon() const { return 0; }
  virtual std::string name() const = 0;

  Action null_action() const { return action_space().null_action(); }
};

}  // namespace rdmdp
