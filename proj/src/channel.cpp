#include "rdmdp/channel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "rdmdp/csv.hpp"
#include "rdmdp/errors.hpp"

namespace rdmdp {

namespace {

Vector dirac(int at) {
  Vector v(static_cast<std::size_t>(at + 1), 0.0);
  v[static_cast<std::size_t>(at)] = 1.0;
  return v;
}

void check_pmf(const Vector& pmf, int lo, int hi, const char* what) {
  if (pmf.empty() || static_cast<int>(pmf.size()) > hi + 1)
    throw std::invalid_argument(std::string("ChannelConfig: ") + what + " pmf exceeds its maximum delay");
  double total = 0.0;
  for (std::size_t d = 0; d < pmf.size(); ++d) {
    if (!(pmf[d] >= 0.0)) throw std::invalid_argument(std::string("ChannelConfig: negative ") + what + " mass");
    if (static_cast<int>(d) < lo && pmf[d] > 0.0)
      throw std::invalid_argument(std::string("ChannelConfig: ") + what + " latency below its minimum");
    total += pmf[d];
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument(std::string("ChannelConfig: ") + what + " pmf does not sum to 1");
}

int draw_from(const Vector& pmf, Rng& rng) {
  for (std::size_t d = 0; d < pmf.size(); ++d)
    if (pmf[d] == 1.0) return static_cast<int>(d);
  return static_cast<int>(rng.categorical(pmf));
}

}  // namespace

ChannelConfig ChannelConfig::constant(int alpha, int beta) {
  ChannelConfig c;
  c.max_alpha = alpha;
  c.max_beta = beta;
  c.obs_latency_pmf = dirac(alpha);
  c.act_latency_pmf = dirac(beta);
  c.validate();
  return c;
}

ChannelConfig ChannelConfig::from_processes(const DelayProcess& p_alpha, const DelayProcess& p_beta) {
  if (!p_alpha.marginal() || !p_beta.marginal())
    throw std::invalid_argument("ChannelConfig: conditional-table processes define no latency distribution");
  ChannelConfig c;
  c.max_alpha = p_alpha.max_delay();
  c.max_beta = p_beta.max_delay();
  c.obs_latency_pmf = *p_alpha.marginal();
  c.act_latency_pmf = *p_beta.marginal();
  c.validate();
  return c;
}

ChannelConfig ChannelConfig::from_traces(int max_alpha, int max_beta, std::vector<int> obs_trace,
                                         std::vector<int> act_trace) {
  ChannelConfig c;
  c.max_alpha = max_alpha;
  c.max_beta = max_beta;
  c.obs_trace = std::move(obs_trace);
  c.act_trace = std::move(act_trace);
  c.validate();
  return c;
}

void ChannelConfig::validate() const {
  if (max_alpha < 0 || max_beta < 1) throw std::invalid_argument("ChannelConfig: need max_alpha >= 0 and max_beta >= 1");
  if (uses_trace()) {
    if (act_trace.empty()) throw std::invalid_argument("ChannelConfig: traces must cover both directions");
    for (int d : obs_trace)
      if (d < 0) throw std::invalid_argument("ChannelConfig: negative observation latency in trace");
    for (int d : act_trace)
      if (d < 1) throw std::invalid_argument("ChannelConfig: action latency must be >= 1");
    return;
  }
  check_pmf(obs_latency_pmf, 0, max_alpha, "observation");
  check_pmf(act_latency_pmf, 1, max_beta, "action");
}

ChannelSimulator::ChannelSimulator(const Environment& env, ChannelConfig config, Rng env_rng, Rng latency_rng)
    : env_(&env), config_(std::move(config)), env_rng_(env_rng), latency_rng_(latency_rng) {
  config_.validate();
}

int ChannelSimulator::draw_obs_latency() {
  if (config_.uses_trace())
    return config_.obs_trace[static_cast<std::size_t>(trace_pos_obs_++ % static_cast<long>(config_.obs_trace.size()))];
  return draw_from(config_.obs_latency_pmf, latency_rng_);
}

int ChannelSimulator::draw_act_latency() {
  if (config_.uses_trace())
    return config_.act_trace[static_cast<std::size_t>(trace_pos_act_++ % static_cast<long>(config_.act_trace.size()))];
  return draw_from(config_.act_latency_pmf, latency_rng_);
}

void ChannelSimulator::send_action(long timestamp, const Action& a) {
  const int latency = draw_act_latency();
  if (latency > config_.max_beta) {
    overflow_tick_ = true;  // would arrive too late to be representable; dropped
    return;
  }
  action_flight_.push_back(ActionMessage{timestamp, timestamp + latency, latency, seq_++, a});
}

AugmentedState ChannelSimulator::reset() {
  const int ma = config_.max_alpha, mb = config_.max_beta;
  const long k = config_.buffer_len();
  const Action null = env_->null_action();
  action_flight_.clear();
  obs_flight_.clear();
  undelayed_.clear();
  tick_ = 0;
  consecutive_overflow_ = 0;

  env_obs_ = env_->reset(env_rng_);
  const long c0 = -ma;
  env_next_tick_ = c0;
  env_cumulative_ = 0.0;
  env_terminal_ = false;
  held_timestamp_ = c0 - 1 - mb;
  held_latency_ = mb;
  held_action_ = null;
  for (long ts = -k; ts <= -1; ++ts) send_action(ts, null);

  state_ = AugmentedState{env_obs_, ActionBuffer(static_cast<std::size_t>(k), null), ma, mb, mb};
  agent_capture_ = c0;
  agent_cumulative_ = 0.0;
  undelayed_.push_back(UndelayedRecord{c0, env_obs_, 0.0, false, held_timestamp_});
  done_ = false;
  return state_;
}

void ChannelSimulator::advance_environment(long through_tick) {
  for (long k = env_next_tick_; k <= through_tick && !env_terminal_; ++k) {
    // Superseding: the freshest production timestamp wins; later sends break ties.
    const ActionMessage* best = nullptr;
    for (const ActionMessage& m : action_flight_) {
      if (m.arrival > k) continue;
      if (best == nullptr || m.timestamp > best->timestamp || (m.timestamp == best->timestamp && m.seq > best->seq))
        best = &m;
    }
    if (best != nullptr && best->timestamp > held_timestamp_) {
      held_timestamp_ = best->timestamp;
      held_latency_ = best->latency;
      held_action_ = best->action;
    }
    std::erase_if(action_flight_, [k](const ActionMessage& m) { return m.arrival <= k; });

    EnvStep step = env_->step(env_obs_, held_action_, env_rng_);
    env_obs_ = step.next_observation;
    env_cumulative_ += step.reward;
    env_terminal_ = step.terminal;
    const long capture = k + 1;
    long beta = k - held_timestamp_;
    if (beta > config_.max_beta) {
      beta = config_.max_beta;
      overflow_tick_ = true;
    }
    const int kappa = std::min(held_latency_, static_cast<int>(beta));
    undelayed_.push_back(UndelayedRecord{capture, env_obs_, step.reward, step.terminal, held_timestamp_});

    const int latency = draw_obs_latency();
    if (latency > config_.max_alpha) {
      overflow_tick_ = true;
    } else {
      obs_flight_.push_back(ObsMessage{capture, std::max<long>(capture + latency, 1), seq_++, env_obs_,
                                       env_cumulative_, step.terminal, static_cast<int>(beta), kappa});
    }
    env_next_tick_ = k + 1;
  }
  if (env_terminal_) env_next_tick_ = std::max(env_next_tick_, through_tick + 1);
}

ChannelStep ChannelSimulator::step(const Action& a) {
  if (done_) throw ContractViolation("ChannelSimulator::step: episode finished; call reset()");
  overflow_tick_ = false;
  send_action(tick_, a);
  advance_environment(tick_);
  ++tick_;

  const ObsMessage* fresh = nullptr;
  for (const ObsMessage& m : obs_flight_) {
    if (m.arrival > tick_) continue;
    if (fresh == nullptr || m.capture > fresh->capture || (m.capture == fresh->capture && m.seq > fresh->seq)) fresh = &m;
  }
  ChannelStep out;
  AugmentedState next = state_;
  next.buffer.push(a);
  if (fresh != nullptr && fresh->capture > agent_capture_) {
    // Summed step by step in capture order so the total matches a direct rollout bit for bit.
    const long first = undelayed_.front().capture_tick;
    double r = 0.0;
    for (long c = agent_capture_ + 1; c <= fresh->capture; ++c) r += undelayed_[static_cast<std::size_t>(c - first)].reward;
    out.reward = r;
    out.terminal = fresh->terminal;
    next.obs = fresh->obs;
    next.act_delay = fresh->act_delay;
    next.kappa = fresh->kappa;
    agent_capture_ = fresh->capture;
    agent_cumulative_ = fresh->cumulative_reward;
  }
  std::erase_if(obs_flight_, [this](const ObsMessage& m) { return m.arrival <= tick_ || m.capture <= agent_capture_; });

  long alpha = tick_ - agent_capture_;
  if (alpha > config_.max_alpha) {
    alpha = config_.max_alpha;
    overflow_tick_ = true;
  }
  next.obs_delay = static_cast<int>(alpha);

  if (overflow_tick_) {
    if (++consecutive_overflow_ > config_.buffer_len())
      throw ChannelOverflow("delay channel: more than K=" + std::to_string(config_.buffer_len()) +
                            " consecutive ticks with over-maximum delays");
  } else {
    consecutive_overflow_ = 0;
  }
  next.validate(config_.max_alpha, config_.max_beta);
  state_ = std::move(next);
  out.next = state_;
  done_ = out.terminal;
  return out;
}

ChannelEpisode channel_simulate(const Environment& env, const Policy& agent_policy, const ChannelConfig& config,
                                long ticks, Rng& rng) {
  if (ticks < 1) throw std::invalid_argument("channel_simulate: ticks must be >= 1");
  Rng agent_rng = rng.split();
  Rng env_rng = rng.split();
  Rng latency_rng = rng.split();
  ChannelSimulator sim(env, config, env_rng, latency_rng);
  ChannelEpisode ep;
  AugmentedState x = sim.reset();
  ep.rows.push_back(ChannelLogRow{0, x, {}, 0.0, false});
  for (long t = 0; t < ticks; ++t) {
    PolicySample a = policy_sample(agent_policy, x, agent_rng);
    ep.rows.back().action = a.action;
    ChannelStep s = sim.step(a.action);
    x = s.next;
    ep.rows.push_back(ChannelLogRow{sim.tick(), x, {}, s.reward, s.terminal});
    if (s.terminal) break;
  }
  ep.undelayed = sim.undelayed_log();
  return ep;
}

void write_episode_log(std::ostream& out, const ChannelEpisode& episode) {
  out << "tick,alpha,beta,kappa,reward,terminal\n";
  for (const ChannelLogRow& r : episode.rows) {
    out << r.tick << ',' << r.state.obs_delay << ',' << r.state.act_delay << ',';
    if (r.state.kappa) out << *r.state.kappa;
    out << ',' << format_double(r.reward) << ',' << (r.terminal ? 1 : 0) << '\n';
  }
}

}  // namespace rdmdp
