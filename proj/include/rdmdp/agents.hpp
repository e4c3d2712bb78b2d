#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "rdmdp/channel.hpp"
#include "rdmdp/encoder.hpp"
#include "rdmdp/nn.hpp"
#include "rdmdp/policy.hpp"
#include "rdmdp/replay_memory.hpp"

namespace rdmdp {

/// dcac: n-step soft critic over resampled fragments.
/// sac: 1-step twin q on the augmented state.
/// rtac: dcac restricted to alpha = 0, beta = 1.
/// sac_naive: sac on the bare observation (ignores the buffer and delays).
enum class AgentKind { dcac, sac, rtac, sac_naive };

AgentKind parse_agent_kind(const std::string& name);
std::string agent_kind_name(AgentKind k);

struct AgentConfig {
  AgentKind kind = AgentKind::dcac;
  double lr = 3e-4;
  double gamma = 0.99;
  int batch_size = 128;
  double tau = 0.005;
  double reward_scale = 5.0;
  double entropy_scale = 1.0;
  std::size_t memory_size = 1000000;
  long warmup = 10000;
  int updates_per_step = 1;
  int num_critics = 2;
  int hidden = 256;
  int layers = 2;
  nn::Activation activation = nn::Activation::relu;
  /// Cap on the fragment length (0 = maximal valid fragment).
  std::size_t max_n = 0;
  bool use_kappa = false;

  /// Throws ConfigError for out-of-range values.
  void validate() const;
  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

/// Standard normal draws consumed by one update. DCAC uses one B x d block per
/// resampled step; SAC uses {actor, target}.
using UpdateNoise = std::vector<nn::Matrix>;

struct LossReport {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double mean_n = 0.0;
  /// Regression target per batch element (entropy and reward scaling included).
  std::vector<double> target;
};

/// Twin-critic soft actor-critic over augmented states, continuous actions.
///
/// One update draws a batch of valid fragments, runs a single resampling pass
/// on one tape and builds both losses from it. The critic regression target is
/// a plain value (target critics, detached actions) and the actor sees the
/// online critics frozen, so summing the two losses and running one backward
/// pass gives each network exactly its own gradient.
class Agent {
 public:
  Agent(AgentConfig config, std::size_t obs_dim, ActionSpace space, int max_alpha, int max_beta, Rng& init_rng);

  const AgentConfig& config() const { return config_; }
  const Encoder& encoder() const { return encoder_; }
  const Policy& policy() const { return policy_; }
  bool uses_fragments() const { return config_.kind == AgentKind::dcac || config_.kind == AgentKind::rtac; }
  /// Fragment cap passed to the replay sampler (1 for the q-learners and rtac).
  std::size_t fragment_cap() const;

  PolicySample act(const AugmentedState& x, Rng& rng) const { return policy_sample(policy_, x, rng); }
  Action act_deterministic(const AugmentedState& x) const { return policy_mode(policy_, x); }

  /// Samples a batch, computes both losses, takes one Adam step per network and
  /// moves the targets by tau.
  LossReport update(const ReplayMemory& memory, Rng& rng);
  LossReport update_batch(const std::vector<ValidSubTrajectory>& batch, Rng& rng);

  /// Noise blocks for a batch, drawn in a fixed order.
  UpdateNoise draw_noise(const std::vector<ValidSubTrajectory>& batch, Rng& rng) const;
  /// Losses for fixed noise. With backward = true the gradients are left in the
  /// parameters (zeroed first); nothing is stepped.
  LossReport losses(const std::vector<ValidSubTrajectory>& batch, const UpdateNoise& noise, bool backward);

  nn::Mlp& policy_net() { return *policy_net_; }
  nn::Mlp& critic(int i) { return critics_[static_cast<std::size_t>(i)]; }
  nn::Mlp& target_critic(int i) { return targets_[static_cast<std::size_t>(i)]; }
  const nn::Mlp& critic(int i) const { return critics_[static_cast<std::size_t>(i)]; }
  const nn::Mlp& target_critic(int i) const { return targets_[static_cast<std::size_t>(i)]; }
  std::vector<nn::Parameter*> policy_parameters() { return policy_net_->parameters(); }
  std::vector<nn::Parameter*> critic_parameters();

 private:
  LossReport fragment_losses(const std::vector<ValidSubTrajectory>& batch, const UpdateNoise& noise, bool backward);
  LossReport transition_losses(const std::vector<ValidSubTrajectory>& batch, const UpdateNoise& noise, bool backward);
  nn::Matrix critic_input(const nn::Matrix& states, const nn::Matrix& actions) const;

  AgentConfig config_;
  Encoder encoder_;
  std::shared_ptr<nn::Mlp> policy_net_;
  Policy policy_;
  std::vector<nn::Mlp> critics_;
  std::vector<nn::Mlp> targets_;
  nn::AdamState policy_opt_;
  std::vector<nn::AdamState> critic_opts_;
};

/// Tabular soft state-value critic trained on fragments with the exact
/// expectation of the soft n-step target over the resampled actions of a
/// discrete policy. Unseen states read as 0.
class TabularSoftCritic {
 public:
  TabularSoftCritic(double gamma, double entropy_scale, double lr) : gamma_(gamma), scale_(entropy_scale), lr_(lr) {}

  double value(const AugmentedState& x) const;
  /// E over a*_t ~ pi of the soft n-step target from the fragment.
  double expected_target(const ValidSubTrajectory& fragment, const Policy& pi, int num_actions) const;
  /// v(x0) += lr * (target - v(x0)); returns the squared error before the step.
  double update(const ValidSubTrajectory& fragment, const Policy& pi, int num_actions);
  const std::unordered_map<StateKey, double, StateKeyHash>& table() const { return table_; }

 private:
  double gamma_, scale_, lr_;
  std::unordered_map<StateKey, double, StateKeyHash> table_;
};

/// Tabular soft action-value critic with the 1-step backup
/// q(x,a) <- r + gamma * E_{a'~pi}[q(x',a') - scale * log pi(a'|x')].
class TabularSoftQ {
 public:
  TabularSoftQ(double gamma, double entropy_scale, double lr) : gamma_(gamma), scale_(entropy_scale), lr_(lr) {}

  double value(const AugmentedState& x, int a) const;
  double update(const AugmentedState& x, int a, double reward, const AugmentedState& next, bool terminal,
                const Policy& pi, int num_actions);

 private:
  double gamma_, scale_, lr_;
  std::unordered_map<StateKey, Vector, StateKeyHash> table_;
};

struct TrainOptions {
  long steps = 100000;
  std::uint64_t seed = 0;
  long eval_every = 1000;
  int eval_episodes = 5;
  /// Evaluate by sampling from the policy instead of its mean action.
  bool eval_stochastic = false;
};

struct MetricsRow {
  long step = 0;
  double eval_return = 0.0;
  double critic_loss = 0.0;  // means over the updates since the previous row (nan if none)
  double actor_loss = 0.0;
  double mean_n = 0.0;
  double alpha_mean = 0.0;  // over the training states visited since the previous row
  double beta_mean = 0.0;
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  /// Per-episode returns of the last evaluation.
  std::vector<double> final_returns;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

/// Ground-truth return of one episode: the undelayed reward of the first
/// `horizon` environment steps. The agent keeps acting until those steps exist
/// (or the episode terminates).
double evaluate_episode(const Environment& env, const ChannelConfig& channel, const Policy& pi, bool stochastic,
                        std::size_t horizon, Rng& rng);
std::vector<double> evaluate_policy(const Environment& env, const ChannelConfig& channel, const Policy& pi,
                                    bool stochastic, int episodes, Rng& rng);

/// Episode length used for training resets and evaluation (1000 when the
/// environment has no horizon).
std::size_t episode_horizon(const Environment& env);

/// Runs one seeded training job. Throws ConfigError before stepping when the
/// agent does not fit the channel (rtac off alpha = 0, beta = 1). Rows are
/// written and flushed to `metrics` when given.
TrainResult train(const Environment& env, const ChannelConfig& channel, const AgentConfig& agent,
                  const TrainOptions& options, std::ostream* metrics = nullptr);

/// Forces the rtac setting: constant alpha = 0, beta = 1 and n = 1.
AgentConfig rtac_mode(AgentConfig config);

}  // namespace rdmdp
