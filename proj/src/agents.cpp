#include "rdmdp/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "rdmdp/csv.hpp"
#include "rdmdp/errors.hpp"

namespace rdmdp {

namespace {

using nn::Matrix;
using nn::Var;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<int> layer_sizes(std::size_t in, int hidden, int layers, std::size_t out) {
  std::vector<int> sizes{static_cast<int>(in)};
  for (int i = 0; i < layers; ++i) sizes.push_back(hidden);
  sizes.push_back(static_cast<int>(out));
  return sizes;
}

Matrix column(const std::vector<double>& v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

Matrix normal_block(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

void check_fragment(const ValidSubTrajectory& f) {
  f.validate();
}

}  // namespace

AgentKind parse_agent_kind(const std::string& name) {
  if (name == "dcac") return AgentKind::dcac;
  if (name == "sac") return AgentKind::sac;
  if (name == "rtac") return AgentKind::rtac;
  if (name == "sac-naive") return AgentKind::sac_naive;
  throw std::invalid_argument("unknown agent '" + name + "' (dcac|sac|rtac|sac-naive)");
}

std::string agent_kind_name(AgentKind k) {
  switch (k) {
    case AgentKind::dcac: return "dcac";
    case AgentKind::sac: return "sac";
    case AgentKind::rtac: return "rtac";
    case AgentKind::sac_naive: return "sac-naive";
  }
  return "dcac";
}

void AgentConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("agent.lr must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("agent.gamma must lie in [0, 1]");
  if (batch_size < 1) throw ConfigError("agent.batch_size must be at least 1");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("agent.tau must lie in [0, 1]");
  if (!(reward_scale >= 0.0) || !std::isfinite(reward_scale)) throw ConfigError("agent.reward_scale must be >= 0");
  if (!(entropy_scale >= 0.0) || !std::isfinite(entropy_scale)) throw ConfigError("agent.entropy_scale must be >= 0");
  if (memory_size < 2) throw ConfigError("agent.memory_size must be at least 2");
  if (warmup < 0) throw ConfigError("agent.warmup must be >= 0");
  if (updates_per_step < 0) throw ConfigError("agent.updates_per_step must be >= 0");
  if (num_critics != 2) throw ConfigError("agent.num_critics must be 2 (twin critics)");
  if (hidden < 1 || layers < 0) throw ConfigError("agent.hidden must be >= 1 and agent.layers >= 0");
}

AgentConfig rtac_mode(AgentConfig config) {
  config.kind = AgentKind::rtac;
  config.max_n = 1;
  return config;
}

// --- Agent -------------------------------------------------------------------

Agent::Agent(AgentConfig config, std::size_t obs_dim, ActionSpace space, int max_alpha, int max_beta, Rng& init_rng)
    : config_(config) {
  config_.validate();
  if (space.kind != ActionKind::continuous || space.size == 0)
    throw std::invalid_argument("Agent: neural agents need a continuous action space");
  encoder_.obs_dim = obs_dim;
  encoder_.action_space = space;
  encoder_.buffer_len = max_alpha + max_beta;
  encoder_.max_alpha = max_alpha;
  encoder_.max_beta = max_beta;
  encoder_.use_kappa = config_.use_kappa;
  if (config_.kind == AgentKind::sac_naive) {
    encoder_.use_buffer = false;
    encoder_.use_delays = false;
    encoder_.use_kappa = false;
  }
  const std::size_t w = encoder_.width();
  const std::size_t d = space.size;
  policy_net_ = std::make_shared<nn::Mlp>(layer_sizes(w, config_.hidden, config_.layers, 2 * d), config_.activation,
                                          init_rng);
  policy_ = Policy{GaussianMlpPolicy{policy_net_, encoder_}, agent_kind_name(config_.kind)};
  const std::size_t critic_in = uses_fragments() ? w : w + d;
  for (int i = 0; i < config_.num_critics; ++i) {
    critics_.emplace_back(layer_sizes(critic_in, config_.hidden, config_.layers, 1), config_.activation, init_rng);
    targets_.push_back(critics_.back());
  }
  policy_opt_.lr = config_.lr;
  critic_opts_.resize(critics_.size());
  for (nn::AdamState& s : critic_opts_) s.lr = config_.lr;
}

std::size_t Agent::fragment_cap() const {
  if (config_.kind == AgentKind::dcac) return config_.max_n;
  return 1;
}

std::vector<nn::Parameter*> Agent::critic_parameters() {
  std::vector<nn::Parameter*> out;
  for (nn::Mlp& c : critics_)
    for (nn::Parameter* p : c.parameters()) out.push_back(p);
  return out;
}

UpdateNoise Agent::draw_noise(const std::vector<ValidSubTrajectory>& batch, Rng& rng) const {
  const auto b = static_cast<Eigen::Index>(batch.size());
  const auto d = static_cast<Eigen::Index>(encoder_.action_space.size);
  UpdateNoise noise;
  if (uses_fragments()) {
    std::size_t n_max = 0;
    for (const ValidSubTrajectory& f : batch) n_max = std::max(n_max, f.length());
    for (std::size_t t = 0; t < n_max; ++t) noise.push_back(normal_block(b, d, rng));
  } else {
    noise.push_back(normal_block(b, d, rng));
    noise.push_back(normal_block(b, d, rng));
  }
  return noise;
}

LossReport Agent::losses(const std::vector<ValidSubTrajectory>& batch, const UpdateNoise& noise, bool backward) {
  if (batch.empty()) throw std::invalid_argument("Agent: empty batch");
  for (const ValidSubTrajectory& f : batch) check_fragment(f);
  if (backward) {
    nn::zero_grad(policy_parameters());
    nn::zero_grad(critic_parameters());
  }
  return uses_fragments() ? fragment_losses(batch, noise, backward) : transition_losses(batch, noise, backward);
}

LossReport Agent::fragment_losses(const std::vector<ValidSubTrajectory>& batch, const UpdateNoise& noise,
                                  bool backward) {
  const std::size_t B = batch.size();
  const auto d = static_cast<Eigen::Index>(encoder_.action_space.size);
  const auto obs_w = static_cast<Eigen::Index>(encoder_.obs_dim);
  const auto buf_off = static_cast<Eigen::Index>(encoder_.buffer_offset());
  const auto delay_off = static_cast<Eigen::Index>(encoder_.delay_offset());
  const auto width = static_cast<Eigen::Index>(encoder_.width());
  const int K = encoder_.buffer_len;
  const double gamma = config_.gamma;

  std::size_t n_max = 0;
  for (const ValidSubTrajectory& f : batch) n_max = std::max(n_max, f.length());
  if (noise.size() < n_max) throw std::invalid_argument("Agent: not enough noise blocks for the batch");

  // Rewards, tail discounts and the (constant) observation/delay blocks of every step.
  std::vector<double> ret(B, 0.0), tail_discount(B, 0.0);
  std::vector<const AugmentedState*> starts(B);
  for (std::size_t b = 0; b < B; ++b) {
    const ValidSubTrajectory& f = batch[b];
    starts[b] = &f.start;
    double g = 1.0;
    for (const TrajectoryRecord& r : f.steps) {
      ret[b] += g * config_.reward_scale * r.reward;
      g *= gamma;
    }
    tail_discount[b] = f.ends_terminal() ? 0.0 : g;
  }
  const Matrix x0 = encoder_.encode(starts);

  nn::Tape tape;
  Var x = tape.constant(x0);
  std::vector<Var> xs{x};
  Var entropy;  // sum_t gamma^t log pi(a*_t | x*_t), B x 1
  bool have_entropy = false;
  for (std::size_t t = 0; t < n_max; ++t) {
    Var out = policy_net_->forward(tape, x);
    nn::SquashedSample s = nn::reparameterized_gaussian_sample(tape, nn::slice_cols(out, 0, d),
                                                               nn::slice_cols(out, d, d), noise[t]);
    Matrix mask(static_cast<Eigen::Index>(B), 1);
    std::vector<const AugmentedState*> next(B);
    for (std::size_t b = 0; b < B; ++b) {
      const bool live = t < batch[b].length();
      mask(static_cast<Eigen::Index>(b), 0) = live ? 1.0 : 0.0;
      next[b] = live ? &batch[b].steps[t].state : starts[b];
    }
    Var term = nn::scale(nn::mul(tape.constant(mask), s.log_prob), std::pow(gamma, static_cast<double>(t)));
    entropy = have_entropy ? nn::add(entropy, term) : term;
    have_entropy = true;

    // x*_{t+1}: observation and delays as recorded, buffer shifted with a*_t in front.
    Var e = tape.constant(encoder_.encode(next));
    std::vector<Var> parts{nn::slice_cols(e, 0, obs_w), s.action};
    if (K > 1) parts.push_back(nn::slice_cols(x, buf_off, (K - 1) * d));
    if (width > delay_off) parts.push_back(nn::slice_cols(e, delay_off, width - delay_off));
    x = nn::concat_cols(parts);
    xs.push_back(x);
  }

  // Tail state x*_n per batch element, gathered with one-hot row masks.
  Var tail;
  bool have_tail = false;
  for (std::size_t t = 0; t <= n_max; ++t) {
    Matrix pick = Matrix::Zero(static_cast<Eigen::Index>(B), 1);
    bool any = false;
    for (std::size_t b = 0; b < B; ++b)
      if (batch[b].length() == t) {
        pick(static_cast<Eigen::Index>(b), 0) = 1.0;
        any = true;
      }
    if (!any) continue;
    Var part = nn::mul_col(xs[t], tape.constant(pick));
    tail = have_tail ? nn::add(tail, part) : part;
    have_tail = true;
  }

  const Matrix entropy_value = have_entropy ? entropy.value() : Matrix::Zero(static_cast<Eigen::Index>(B), 1);
  const Matrix ret_m = column(ret), disc_m = column(tail_discount);

  // Critic regression target: min of the target twins, no gradient anywhere.
  const Matrix tail_value = tail.value();
  Matrix target_tail = targets_[0].predict(tail_value);
  for (std::size_t i = 1; i < targets_.size(); ++i) target_tail = target_tail.cwiseMin(targets_[i].predict(tail_value));
  const Matrix y =
      ret_m + disc_m.cwiseProduct(target_tail) - config_.entropy_scale * entropy_value;

  Var x0v = tape.constant(x0);
  Var yv = tape.constant(y);
  Var critic_loss;
  for (std::size_t i = 0; i < critics_.size(); ++i) {
    Var l = nn::mean(nn::square(nn::sub(critics_[i].forward(tape, x0v), yv)));
    critic_loss = i == 0 ? l : nn::add(critic_loss, l);
  }
  critic_loss = nn::scale(critic_loss, 1.0 / static_cast<double>(critics_.size()));

  // Actor: v_soft through the resampled chain, online critics frozen at the tail.
  Var tail_q = critics_[0].forward(tape, tail, true);
  for (std::size_t i = 1; i < critics_.size(); ++i) tail_q = nn::minimum(tail_q, critics_[i].forward(tape, tail, true));
  Var soft = nn::add(tape.constant(ret_m), nn::mul(tape.constant(disc_m), tail_q));
  if (have_entropy) soft = nn::sub(soft, nn::scale(entropy, config_.entropy_scale));
  Var actor_loss = nn::neg(nn::mean(soft));

  if (backward) tape.backward(nn::add(critic_loss, actor_loss));

  LossReport rep;
  rep.critic_loss = critic_loss.item();
  rep.actor_loss = actor_loss.item();
  double total_n = 0.0;
  for (const ValidSubTrajectory& f : batch) total_n += static_cast<double>(f.length());
  rep.mean_n = total_n / static_cast<double>(B);
  rep.target.assign(y.data(), y.data() + y.rows());
  return rep;
}

Matrix Agent::critic_input(const Matrix& states, const Matrix& actions) const {
  Matrix out(states.rows(), states.cols() + actions.cols());
  out << states, actions;
  return out;
}

LossReport Agent::transition_losses(const std::vector<ValidSubTrajectory>& batch, const UpdateNoise& noise,
                                    bool backward) {
  const std::size_t B = batch.size();
  const auto d = static_cast<Eigen::Index>(encoder_.action_space.size);
  if (noise.size() < 2) throw std::invalid_argument("Agent: q-learners need actor and target noise");

  std::vector<const AugmentedState*> starts(B), nexts(B);
  Matrix actions(static_cast<Eigen::Index>(B), d);
  std::vector<double> reward(B), cont(B);
  for (std::size_t b = 0; b < B; ++b) {
    const ValidSubTrajectory& f = batch[b];
    if (f.length() < 1) throw ContractViolation("Agent: q-learner transition needs one successor");
    starts[b] = &f.start;
    nexts[b] = &f.steps[0].state;
    const Action& a = f.steps[0].state.buffer[1];  // the action sent from the start state
    for (Eigen::Index j = 0; j < d; ++j) actions(static_cast<Eigen::Index>(b), j) = a[static_cast<std::size_t>(j)];
    reward[b] = config_.reward_scale * f.steps[0].reward;
    cont[b] = f.steps[0].terminal ? 0.0 : config_.gamma;
  }
  const Matrix x0 = encoder_.encode(starts);
  const Matrix x1 = encoder_.encode(nexts);

  // Soft 1-step target with a' ~ pi(.|x1), computed off the tape.
  const Matrix head1 = policy_net_->predict(x1);
  Matrix next_action(static_cast<Eigen::Index>(B), d);
  std::vector<double> next_logp(B, 0.0);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(B); ++b) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double ls = std::clamp(head1(b, d + j), nn::kLogStdMin, nn::kLogStdMax);
      const double eps = noise[1](b, j);
      const double u = head1(b, j) + std::exp(ls) * eps;
      next_action(b, j) = std::tanh(u);
      next_logp[static_cast<std::size_t>(b)] += -0.5 * eps * eps - ls - half_log_2pi - nn::log1m_tanh_sq(u);
    }
  }
  const Matrix q_in1 = critic_input(x1, next_action);
  Matrix q_next = targets_[0].predict(q_in1);
  for (std::size_t i = 1; i < targets_.size(); ++i) q_next = q_next.cwiseMin(targets_[i].predict(q_in1));
  Matrix y(static_cast<Eigen::Index>(B), 1);
  for (std::size_t b = 0; b < B; ++b) {
    const auto r = static_cast<Eigen::Index>(b);
    y(r, 0) = reward[b] + cont[b] * (q_next(r, 0) - config_.entropy_scale * next_logp[b]);
  }

  nn::Tape tape;
  Var q_in0 = tape.constant(critic_input(x0, actions));
  Var yv = tape.constant(y);
  Var critic_loss;
  for (std::size_t i = 0; i < critics_.size(); ++i) {
    Var l = nn::mean(nn::square(nn::sub(critics_[i].forward(tape, q_in0), yv)));
    critic_loss = i == 0 ? l : nn::add(critic_loss, l);
  }
  critic_loss = nn::scale(critic_loss, 1.0 / static_cast<double>(critics_.size()));

  Var x0v = tape.constant(x0);
  Var out = policy_net_->forward(tape, x0v);
  nn::SquashedSample s =
      nn::reparameterized_gaussian_sample(tape, nn::slice_cols(out, 0, d), nn::slice_cols(out, d, d), noise[0]);
  Var q_new_in = nn::concat_cols({x0v, s.action});
  Var q_new = critics_[0].forward(tape, q_new_in, true);
  for (std::size_t i = 1; i < critics_.size(); ++i) q_new = nn::minimum(q_new, critics_[i].forward(tape, q_new_in, true));
  Var actor_loss = nn::mean(nn::sub(nn::scale(s.log_prob, config_.entropy_scale), q_new));

  if (backward) tape.backward(nn::add(critic_loss, actor_loss));

  LossReport rep;
  rep.critic_loss = critic_loss.item();
  rep.actor_loss = actor_loss.item();
  rep.mean_n = 1.0;
  rep.target.assign(y.data(), y.data() + y.rows());
  return rep;
}

LossReport Agent::update_batch(const std::vector<ValidSubTrajectory>& batch, Rng& rng) {
  const UpdateNoise noise = draw_noise(batch, rng);
  LossReport rep = losses(batch, noise, true);
  nn::adam_step(policy_opt_, policy_parameters());
  for (std::size_t i = 0; i < critics_.size(); ++i) nn::adam_step(critic_opts_[i], critics_[i].parameters());
  for (std::size_t i = 0; i < critics_.size(); ++i) nn::polyak_update(targets_[i], critics_[i], config_.tau);
  return rep;
}

LossReport Agent::update(const ReplayMemory& memory, Rng& rng) {
  std::vector<ValidSubTrajectory> batch;
  batch.reserve(static_cast<std::size_t>(config_.batch_size));
  for (int i = 0; i < config_.batch_size; ++i) batch.push_back(sample_valid_fragment(memory, rng, fragment_cap()));
  return update_batch(batch, rng);
}

// --- tabular critics -----------------------------------------------------------

double TabularSoftCritic::value(const AugmentedState& x) const {
  auto it = table_.find(state_key(x));
  return it == table_.end() ? 0.0 : it->second;
}

double TabularSoftCritic::expected_target(const ValidSubTrajectory& fragment, const Policy& pi,
                                          int num_actions) const {
  fragment.validate();
  const std::size_t n = fragment.length();
  double ret = 0.0, g = 1.0;
  for (const TrajectoryRecord& r : fragment.steps) {
    ret += g * r.reward;
    g *= gamma_;
  }
  const double tail_discount = fragment.ends_terminal() ? 0.0 : g;

  // Exact expectation over a*_0..a*_{n-1}; the buffer is the only thing they change.
  auto go = [&](auto&& self, std::size_t t, const AugmentedState& x) -> double {
    if (t == n) return tail_discount == 0.0 ? 0.0 : tail_discount * value(x);
    const Vector probs = policy_probs(pi, x, num_actions);
    const double gt = std::pow(gamma_, static_cast<double>(t));
    double acc = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      const double p = probs[static_cast<std::size_t>(a)];
      if (p <= 0.0) continue;
      AugmentedState next = fragment.steps[t].state;
      next.buffer = buffer_push(x.buffer, discrete_action(a));
      acc += p * (-scale_ * gt * std::log(p) + self(self, t + 1, next));
    }
    return acc;
  };
  return ret + go(go, 0, fragment.start);
}

double TabularSoftCritic::update(const ValidSubTrajectory& fragment, const Policy& pi, int num_actions) {
  const double y = expected_target(fragment, pi, num_actions);
  double& v = table_[state_key(fragment.start)];
  const double err = y - v;
  v += lr_ * err;
  return err * err;
}

double TabularSoftQ::value(const AugmentedState& x, int a) const {
  auto it = table_.find(state_key(x));
  if (it == table_.end()) return 0.0;
  return it->second.at(static_cast<std::size_t>(a));
}

double TabularSoftQ::update(const AugmentedState& x, int a, double reward, const AugmentedState& next, bool terminal,
                            const Policy& pi, int num_actions) {
  if (a < 0 || a >= num_actions) throw std::invalid_argument("TabularSoftQ: action out of range");
  double y = reward;
  if (!terminal) {
    const Vector probs = policy_probs(pi, next, num_actions);
    double soft = 0.0;
    for (int b = 0; b < num_actions; ++b) {
      const double p = probs[static_cast<std::size_t>(b)];
      if (p > 0.0) soft += p * (value(next, b) - scale_ * std::log(p));
    }
    y += gamma_ * soft;
  }
  Vector& row = table_[state_key(x)];
  if (row.empty()) row.assign(static_cast<std::size_t>(num_actions), 0.0);
  const double err = y - row[static_cast<std::size_t>(a)];
  row[static_cast<std::size_t>(a)] += lr_ * err;
  return err * err;
}

// --- training ------------------------------------------------------------------

void write_metrics_header(std::ostream& out) {
  out << "step,eval_return,critic_loss,actor_loss,mean_n,alpha_mean,beta_mean\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  out << r.step << ',' << format_double(r.eval_return) << ',' << format_double(r.critic_loss) << ','
      << format_double(r.actor_loss) << ',' << format_double(r.mean_n) << ',' << format_double(r.alpha_mean) << ','
      << format_double(r.beta_mean) << '\n';
}

std::size_t episode_horizon(const Environment& env) { return env.horizon() > 0 ? env.horizon() : 1000; }

double evaluate_episode(const Environment& env, const ChannelConfig& channel, const Policy& pi, bool stochastic,
                        std::size_t horizon, Rng& rng) {
  Rng agent_rng = rng.split();
  Rng env_rng = rng.split();
  Rng latency_rng = rng.split();
  ChannelSimulator sim(env, channel, env_rng, latency_rng);
  AugmentedState x = sim.reset();
  // Record 0 is the initial capture; records 1..horizon are the steps we score.
  while (!sim.done() && sim.undelayed_log().size() < horizon + 1 && !sim.undelayed_log().back().terminal) {
    const Action a = stochastic ? policy_sample(pi, x, agent_rng).action : policy_mode(pi, x);
    x = sim.step(a).next;
  }
  const auto& log = sim.undelayed_log();
  double total = 0.0;
  for (std::size_t i = 1; i < log.size() && i <= horizon; ++i) total += log[i].reward;
  return total;
}

std::vector<double> evaluate_policy(const Environment& env, const ChannelConfig& channel, const Policy& pi,
                                    bool stochastic, int episodes, Rng& rng) {
  std::vector<double> out;
  const std::size_t h = episode_horizon(env);
  for (int e = 0; e < episodes; ++e) out.push_back(evaluate_episode(env, channel, pi, stochastic, h, rng));
  return out;
}

TrainResult train(const Environment& env, const ChannelConfig& channel, const AgentConfig& agent_config,
                  const TrainOptions& options, std::ostream* metrics) {
  agent_config.validate();
  channel.validate();
  if (agent_config.kind == AgentKind::rtac &&
      (channel.max_alpha != 0 || channel.max_beta != 1 || channel.uses_trace()))
    throw ConfigError("agent rtac needs constant delays alpha = 0, beta = 1");
  if (options.steps < 0 || options.eval_every < 1 || options.eval_episodes < 1)
    throw ConfigError("run.steps must be >= 0, run.eval_every and run.eval_episodes >= 1");

  Rng root(options.seed);
  Rng init_rng = root.split();
  Rng act_rng = root.split();
  Rng env_rng = root.split();
  Rng latency_rng = root.split();
  Rng update_rng = root.split();
  Rng eval_rng = root.split();

  Agent agent(agent_config, env.observation_dim(), env.action_space(), channel.max_alpha, channel.max_beta, init_rng);
  const Policy warmup_policy{UniformPolicy{env.action_space()}, "uniform"};
  ChannelSimulator sim(env, channel, env_rng, latency_rng);
  ReplayMemory memory(agent_config.memory_size);
  const std::size_t horizon = episode_horizon(env);

  AugmentedState x = sim.reset();
  memory.start_episode(x);
  std::size_t episode_len = 0;

  TrainResult result;
  if (metrics != nullptr) {
    write_metrics_header(*metrics);
    metrics->flush();
  }
  double critic_sum = 0.0, actor_sum = 0.0, n_sum = 0.0, alpha_sum = 0.0, beta_sum = 0.0;
  long updates = 0, visits = 0;

  for (long step = 1; step <= options.steps; ++step) {
    const Policy& behavior = step <= agent_config.warmup ? warmup_policy : agent.policy();
    const Action a = policy_sample(behavior, x, act_rng).action;
    const ChannelStep st = sim.step(a);
    memory.append(st.next, st.reward, st.terminal);
    alpha_sum += st.next.obs_delay;
    beta_sum += st.next.act_delay;
    ++visits;
    x = st.next;
    if (st.terminal || ++episode_len >= horizon) {
      x = sim.reset();
      memory.start_episode(x);
      episode_len = 0;
    }

    if (step >= agent_config.warmup && memory.valid_starts() > 0) {
      for (int u = 0; u < agent_config.updates_per_step; ++u) {
        const LossReport rep = agent.update(memory, update_rng);
        critic_sum += rep.critic_loss;
        actor_sum += rep.actor_loss;
        n_sum += rep.mean_n;
        ++updates;
      }
    }

    if (step % options.eval_every == 0) {
      const std::vector<double> returns =
          evaluate_policy(env, channel, agent.policy(), options.eval_stochastic, options.eval_episodes, eval_rng);
      MetricsRow row;
      row.step = step;
      for (double r : returns) row.eval_return += r;
      row.eval_return /= static_cast<double>(returns.size());
      row.critic_loss = updates > 0 ? critic_sum / static_cast<double>(updates) : kNan;
      row.actor_loss = updates > 0 ? actor_sum / static_cast<double>(updates) : kNan;
      row.mean_n = updates > 0 ? n_sum / static_cast<double>(updates) : kNan;
      row.alpha_mean = alpha_sum / static_cast<double>(visits);
      row.beta_mean = beta_sum / static_cast<double>(visits);
      result.rows.push_back(row);
      result.final_returns = returns;
      if (metrics != nullptr) {
        write_metrics_row(*metrics, row);
        metrics->flush();
      }
      critic_sum = actor_sum = n_sum = alpha_sum = beta_sum = 0.0;
      updates = visits = 0;
    }
  }
  return result;
}

}  // namespace rdmdp
