#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "rdmdp/delay_process.hpp"
#include "rdmdp/policy.hpp"
#include "rdmdp/rng.hpp"
#include "rdmdp/types.hpp"

namespace rdmdp {

/// Latency model of the two communication directions.
///
/// Either pmfs (observation latency over [0, max_alpha], action latency over
/// [1, max_beta]) drawn i.i.d. per message, or raw per-tick traces that are
/// cycled and may exceed the maxima.
struct ChannelConfig {
  int max_alpha = 0;
  int max_beta = 1;
  Vector obs_latency_pmf;
  Vector act_latency_pmf;
  std::vector<int> obs_trace;
  std::vector<int> act_trace;

  static ChannelConfig constant(int alpha, int beta);
  /// Uses the processes' marginals; conditional tables have none and are rejected.
  static ChannelConfig from_processes(const DelayProcess& p_alpha, const DelayProcess& p_beta);
  static ChannelConfig from_traces(int max_alpha, int max_beta, std::vector<int> obs_trace, std::vector<int> act_trace);

  int buffer_len() const { return max_alpha + max_beta; }
  bool uses_trace() const { return !obs_trace.empty(); }
  void validate() const;
};

/// Ground-truth record of one undelayed step as it happened at the remote side.
struct UndelayedRecord {
  long capture_tick = 0;
  Observation obs;
  double reward = 0.0;  // reward of the step that produced obs
  bool terminal = false;
  long applied_timestamp = 0;
};

struct ChannelStep {
  AugmentedState next;
  double reward = 0.0;
  bool terminal = false;
};

/// Discrete-time simulation of a remote undelayed environment talking to the
/// agent over two delayed channels.
///
/// At agent tick t the agent holds x_t and sends a_t stamped t; it arrives at
/// t + latency. The environment step at tick k applies the most recently
/// produced action that has arrived by k and captures the next state at k + 1
/// together with the cumulative reward. Captures travel back with their own
/// latency; the agent keeps the freshest one, so alpha = t - capture tick and
/// beta = capture tick - 1 - timestamp of the applied action. Rewards reach the
/// agent as differences of cumulative values.
///
/// Before tick 0 the environment starts at capture tick -max_alpha with a
/// pending history of K null actions stamped -1..-K; anything arriving at or
/// before tick 0 is delivered at tick 1.
///
/// Each instance draws from three independent streams (environment, latency and
/// the caller's agent stream), so a constant-latency channel consumes the
/// environment stream exactly like a cdmdp_step rollout.
class ChannelSimulator {
 public:
  ChannelSimulator(const Environment& env, ChannelConfig config, Rng env_rng, Rng latency_rng);

  AugmentedState reset();
  /// Sends a_t and advances to tick t + 1. Throws ChannelOverflow after more than K
  /// consecutive ticks with over-maximum delays, ContractViolation after a terminal.
  ChannelStep step(const Action& a);

  const AugmentedState& state() const { return state_; }
  long tick() const { return tick_; }
  bool done() const { return done_; }
  const std::vector<UndelayedRecord>& undelayed_log() const { return undelayed_; }
  const ChannelConfig& config() const { return config_; }

 private:
  struct ActionMessage {
    long timestamp;
    long arrival;
    int latency;
    long seq;
    Action action;
  };
  struct ObsMessage {
    long capture;
    long arrival;
    long seq;
    Observation obs;
    double cumulative_reward;
    bool terminal;
    int act_delay;
    int kappa;
  };

  int draw_obs_latency();
  int draw_act_latency();
  void send_action(long timestamp, const Action& a);
  void advance_environment(long through_tick);

  const Environment* env_;
  ChannelConfig config_;
  Rng env_rng_;
  Rng latency_rng_;

  long tick_ = 0;
  long seq_ = 0;
  long trace_pos_obs_ = 0;
  long trace_pos_act_ = 0;
  bool done_ = true;
  bool overflow_tick_ = false;
  int consecutive_overflow_ = 0;

  // Remote side.
  Observation env_obs_;
  long env_next_tick_ = 0;  // next tick at which the environment steps
  double env_cumulative_ = 0.0;
  bool env_terminal_ = false;
  long held_timestamp_ = 0;
  int held_latency_ = 0;
  Action held_action_;
  std::vector<ActionMessage> action_flight_;
  std::vector<ObsMessage> obs_flight_;

  // Agent side.
  AugmentedState state_;
  long agent_capture_ = 0;
  double agent_cumulative_ = 0.0;

  std::vector<UndelayedRecord> undelayed_;
};

struct ChannelLogRow {
  long tick = 0;
  AugmentedState state;
  Action action;  // action sent from this state (empty on the last row)
  double reward = 0.0;
  bool terminal = false;
};

struct ChannelEpisode {
  std::vector<ChannelLogRow> rows;
  std::vector<UndelayedRecord> undelayed;
};

/// Runs one episode for at most `ticks` agent steps. The random source is split
/// into agent, environment and latency streams in that order.
ChannelEpisode channel_simulate(const Environment& env, const Policy& agent_policy, const ChannelConfig& config,
                                long ticks, Rng& rng);

/// CSV `tick,alpha,beta,kappa,reward,terminal`; kappa is empty when unknown.
void write_episode_log(std::ostream& out, const ChannelEpisode& episode);

}  // namespace rdmdp
