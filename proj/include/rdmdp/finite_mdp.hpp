#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rdmdp/rng.hpp"
#include "rdmdp/types.hpp"

namespace rdmdp {

/// Tabular undelayed environment: P[s][a][s'], R[s][a], initial distribution and
/// terminal flags. Rewards are state-action rewards r(s, a).
struct FiniteMDP {
  int num_states = 0;
  int num_actions = 0;
  Vector init;
  std::vector<std::vector<Vector>> trans;  // [s][a][s']
  std::vector<Vector> reward;              // [s][a]
  std::vector<bool> terminal;

  /// Throws std::invalid_argument if shapes disagree, a probability leaves [0, 1]
  /// or a distribution row misses 1 by more than 1e-12.
  void validate() const;
};

/// One undelayed transition from state s under action a.
EnvStep finite_mdp_step(const FiniteMDP& mdp, int s, int a, Rng& rng);

/// Text format:
///   states=N actions=M
///   s a r p0 ... pN-1        (one line per (s, a) pair)
///   init p0 ... pN-1
///   terminal b0 ... bN-1
/// Blank lines and lines starting with '#' are ignored.
FiniteMDP parse_finite_mdp(std::istream& in);
FiniteMDP load_finite_mdp(const std::string& path);
void write_finite_mdp(std::ostream& out, const FiniteMDP& mdp);

/// Deterministic chain: action 1 moves right, action 0 moves left (clamped);
/// reward `goal_reward` for acting in the last state. No terminal states.
FiniteMDP chain_mdp(int num_states, double goal_reward = 1.0);

/// Dense random MDP with every transition probability bounded away from zero, so
/// the chain under any policy is ergodic. Rewards uniform in [0, 1).
FiniteMDP random_finite_mdp(int num_states, int num_actions, Rng& rng);

/// Adapts a FiniteMDP to the Environment interface (observation = {s}).
class TabularEnv final : public Environment {
 public:
  explicit TabularEnv(FiniteMDP mdp, std::size_t horizon = 0);

  ActionSpace action_space() const override;
  std::size_t observation_dim() const override { return 1; }
  Observation reset(Rng& rng) const override;
  EnvStep step(const Observation& s, const Action& a, Rng& rng) const override;
  std::size_t horizon() const override { return horizon_; }
  std::string name() const override { return "tabular"; }

  const FiniteMDP& mdp() const { return mdp_; }

 private:
  FiniteMDP mdp_;
  std::size_t horizon_;
};

}  // namespace rdmdp
