#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rdmdp/delay_process.hpp"
#include "rdmdp/finite_mdp.hpp"
#include "rdmdp/policy.hpp"

namespace rdmdp::oracle {

/// One outcome of an augmented transition. Rewards are exact sums of base
/// rewards along the unrolled path, so distinct paths keep distinct atoms.
struct Outcome {
  int next = 0;
  double reward = 0.0;
  bool terminal = false;
  double prob = 0.0;
};

/// Exact outcome of f_Delta before the buffer push: (s', beta', reward, terminal).
struct FOutcome {
  int obs = 0;
  int act_delay = 0;
  double reward = 0.0;
  bool terminal = false;
  auto operator<=>(const FOutcome&) const = default;
};

/// Randomly delayed version of a finite MDP with every state
/// S x A^K x reachable(alpha) x reachable(beta) indexed densely.
class AugmentedFiniteMDP {
 public:
  static constexpr std::size_t kMaxStates = 1000000;

  /// Throws CapacityError beyond kMaxStates and std::invalid_argument when the
  /// observation process can jump by more than one.
  AugmentedFiniteMDP(FiniteMDP base, DelayProcess p_alpha, DelayProcess p_beta);

  const FiniteMDP& base() const { return base_; }
  const DelayProcess& p_alpha() const { return p_alpha_; }
  const DelayProcess& p_beta() const { return p_beta_; }
  int buffer_len() const { return k_; }
  int num_actions() const { return base_.num_actions; }
  int num_states() const { return static_cast<int>(states_.size()); }

  const AugmentedState& state(int i) const { return states_[static_cast<std::size_t>(i)]; }
  /// Throws std::out_of_range for states outside the index.
  int index_of(const AugmentedState& x) const;
  /// Index of x with its buffer replaced (same s, alpha, beta).
  int with_buffer(int i, const ActionBuffer& u) const;
  /// Outcomes of taking action a in state i, merged by (next, reward, terminal).
  const std::vector<Outcome>& row(int i, int a) const;
  /// Whether the observation of state i is a terminal base state (absorbing).
  bool is_terminal_obs(int i) const;
  /// Reset distribution: s ~ init, null buffer, maximal delays.
  std::vector<std::pair<int, double>> initial() const;

  /// f_Delta expanded exactly.
  std::map<FOutcome, double> exact_f(int delta, const AugmentedState& x, const Action& a) const;

  std::unordered_map<StateKey, double, StateKeyHash> value_table(const Vector& v) const;

 private:
  FiniteMDP base_;
  DelayProcess p_alpha_, p_beta_;
  int k_ = 0;
  std::vector<AugmentedState> states_;
  std::unordered_map<StateKey, int, StateKeyHash> index_;
  std::vector<std::vector<Outcome>> rows_;  // [i * num_actions + a]
};

/// pi(.|x) for every augmented state, row-major (state, action).
std::vector<Vector> policy_table(const AugmentedFiniteMDP& aug, const Policy& pi);

struct TrajStep {
  int state = 0;
  double reward = 0.0;
  bool terminal = false;
  auto operator<=>(const TrajStep&) const = default;
};

/// Exact law of the next n (state, reward) pairs from a fixed start. Paths that
/// hit a terminal are shorter.
struct TrajectoryDistribution {
  int horizon = 0;
  std::map<std::vector<TrajStep>, double> table;
  double total() const;
};

TrajectoryDistribution enumerate_p_n(const AugmentedFiniteMDP& aug, const Policy& pi, int x0, int n);
/// Guard on the number of enumerated paths.
inline constexpr std::size_t kMaxTrajectories = 1000000;

/// Largest n <= n_max such that every trajectory in the mu-support satisfies the
/// delay condition for t = 1..n.
int max_valid_horizon(const AugmentedFiniteMDP& aug, const Policy& mu, int x0, int n_max);

struct SigmaCheck {
  TrajectoryDistribution lhs;  // E_{tau ~ p^mu}[sigma^pi(. | x0; tau)]
  TrajectoryDistribution rhs;  // p^pi
  double max_abs_error = 0.0;
};

/// Pushes every mu-trajectory through exact partial resampling under pi and
/// compares with the on-policy law. Throws ContractViolation naming t when a
/// supported mu-trajectory violates the delay condition.
SigmaCheck apply_sigma_exact(const AugmentedFiniteMDP& aug, const Policy& pi, const Policy& mu, int x0, int n);

struct ValueResult {
  Vector v;
  long sweeps = 0;
};

/// Jacobi sweeps of the (soft) Bellman evaluation operator until the sup-norm
/// change is below tol. Throws NumericalError after max_sweeps.
ValueResult value_iteration(const AugmentedFiniteMDP& aug, const Policy& pi, double gamma, double tol,
                            long max_sweeps = 1000000);
ValueResult soft_value_iteration(const AugmentedFiniteMDP& aug, const Policy& pi, double gamma, double entropy_scale,
                                 double tol, long max_sweeps = 1000000);
/// Single-threaded reference with the same sweep order; bit-identical output.
ValueResult value_iteration_serial(const AugmentedFiniteMDP& aug, const Policy& pi, double gamma, double entropy_scale,
                                   double tol, long max_sweeps = 1000000);

/// v^pi (soft when entropy_scale > 0) by a direct linear solve of (I - gamma P) v = r.
Vector evaluate_exact(const AugmentedFiniteMDP& aug, const Policy& pi, double gamma, double entropy_scale = 0.0);

/// Stationary distribution of the chain under pi started from `from`, by power
/// iteration to the given L1 tolerance.
Vector steady_state(const AugmentedFiniteMDP& aug, const Policy& pi, const Vector& from, double tol = 1e-15,
                    long max_iter = 10000000);

/// Distribution of the state n steps after `from` (terminal paths drop out).
Vector propagate(const AugmentedFiniteMDP& aug, const Policy& pi, const Vector& from, int n);

/// E over enumerated trajectories of the n-step estimator with tail values v0.
/// When mu is given the trajectories come from mu and are resampled under pi.
double expected_v_hat_n(const AugmentedFiniteMDP& aug, const Policy& pi, const Policy* mu, int x0, int n,
                        const Vector& v0, double gamma);

struct BiasFixture {
  const AugmentedFiniteMDP* aug = nullptr;
  Policy pi;
  std::optional<Policy> mu;  // off-policy when set
  int x0 = 0;
};

/// (E[v_hat_n] - v^pi(x0)) / b with v0 = v^pi + b. Throws std::invalid_argument for b = 0.
double measure_bias_reduction(const BiasFixture& fixture, double b, int n, double gamma);

/// Random discrete policy with a separate row for every augmented state. When
/// deterministic, each row is one-hot.
TabularPolicy random_tabular_policy(const AugmentedFiniteMDP& aug, Rng& rng, bool deterministic);

struct FixtureResult {
  std::string name;
  double max_abs_error = 0.0;
  bool pass = false;
};

/// The resampling certificate over {2, 3}-state MDPs x {constant(1,1),
/// constant(1,2), random (max 1, 2)} x {deterministic, stochastic} policies,
/// horizons up to 3. One row per fixture.
std::vector<FixtureResult> resampling_certificate(std::uint64_t seed, double tol = 1e-12);

}  // namespace rdmdp::oracle
