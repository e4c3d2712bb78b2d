#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rdmdp/agents.hpp"
#include "rdmdp/envs.hpp"
#include "rdmdp/errors.hpp"
#include "rdmdp/finite_mdp.hpp"
#include "rdmdp/oracle.hpp"
#include "rdmdp/rdmdp.hpp"

using namespace rdmdp;
using nn::Matrix;

namespace {

AgentConfig small_config(AgentKind kind, int hidden = 8) {
  AgentConfig c;
  c.kind = kind;
  c.hidden = hidden;
  c.layers = 2;
  c.batch_size = 4;
  c.activation = nn::Activation::tanh;
  return c;
}

// Replay filled from a uniform-random rollout of the delayed point mass.
ReplayMemory rollout_memory(const Environment& env, const ChannelConfig& ch, long steps, std::uint64_t seed) {
  Rng rng(seed);
  ChannelSimulator sim(env, ch, rng.split(), rng.split());
  const Policy uniform{UniformPolicy{env.action_space()}, "uniform"};
  ReplayMemory mem(static_cast<std::size_t>(steps) + 8);
  AugmentedState x = sim.reset();
  mem.start_episode(x);
  for (long t = 0; t < steps; ++t) {
    const ChannelStep st = sim.step(policy_sample(uniform, x, rng).action);
    mem.append(st.next, st.reward, st.terminal);
    x = st.next;
  }
  return mem;
}

std::vector<ValidSubTrajectory> batch_of_length(const ReplayMemory& mem, std::size_t n, std::size_t count) {
  std::vector<ValidSubTrajectory> out;
  for (std::size_t i = 0; i < mem.size() && out.size() < count; ++i) {
    if (!mem.is_valid_start(i)) continue;
    ValidSubTrajectory f = mem.fragment(i, n);
    if (f.length() == n) out.push_back(f);
  }
  REQUIRE(out.size() == count);
  return out;
}

void zero_output(nn::Mlp& net, double bias) {
  auto params = net.parameters();
  params[params.size() - 2]->value.setZero();
  params.back()->value.setConstant(bias);
}

std::vector<double> flatten_grads(const std::vector<nn::Parameter*>& ps) {
  std::vector<double> g;
  for (const nn::Parameter* p : ps)
    for (Eigen::Index i = 0; i < p->grad.size(); ++i) g.push_back(p->grad.data()[i]);
  return g;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Central differences of one loss over a parameter list versus the tape gradient.
double fd_relative_error(Agent& agent, const std::vector<nn::Parameter*>& params,
                         const std::vector<ValidSubTrajectory>& batch, const UpdateNoise& noise, bool actor) {
  agent.losses(batch, noise, true);
  const std::vector<double> analytic = flatten_grads(params);
  std::vector<double> numeric;
  const double h = 1e-5;
  for (nn::Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double keep = p->value.data()[i];
      p->value.data()[i] = keep + h;
      const LossReport up = agent.losses(batch, noise, false);
      p->value.data()[i] = keep - h;
      const LossReport down = agent.losses(batch, noise, false);
      p->value.data()[i] = keep;
      const double lu = actor ? up.actor_loss : up.critic_loss;
      const double ld = actor ? down.actor_loss : down.critic_loss;
      numeric.push_back((lu - ld) / (2.0 * h));
    }
  }
  std::vector<double> diff(analytic.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = analytic[i] - numeric[i];
  return norm(diff) / std::max(norm(analytic), norm(numeric));
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (norm(a) * norm(b));
}

}  // namespace

TEST_CASE("agent kinds and config validation") {
  for (AgentKind k : {AgentKind::dcac, AgentKind::sac, AgentKind::rtac, AgentKind::sac_naive})
    CHECK(parse_agent_kind(agent_kind_name(k)) == k);
  CHECK_THROWS_AS(parse_agent_kind("td3"), std::invalid_argument);
  AgentConfig c;
  CHECK(c.lr == 3e-4);
  CHECK(c.gamma == 0.99);
  CHECK(c.batch_size == 128);
  CHECK(c.tau == 0.005);
  CHECK(c.reward_scale == 5.0);
  CHECK(c.entropy_scale == 1.0);
  CHECK(c.memory_size == 1000000);
  CHECK(c.warmup == 10000);
  CHECK(c.updates_per_step == 1);
  CHECK(c.num_critics == 2);
  c.num_critics = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero critics, zero rewards and no entropy give zero critic loss") {
  PointMass env;
  const ChannelConfig ch = ChannelConfig::constant(1, 2);
  ReplayMemory mem = rollout_memory(env, ch, 60, 1);
  for (AgentKind kind : {AgentKind::dcac, AgentKind::sac}) {
    AgentConfig c = small_config(kind);
    c.reward_scale = 0.0;
    c.entropy_scale = 0.0;
    Rng init(3);
    Agent agent(c, env.observation_dim(), env.action_space(), 1, 2, init);
    for (int i = 0; i < 2; ++i) {
      zero_output(agent.critic(i), 0.0);
      zero_output(agent.target_critic(i), 0.0);
    }
    Rng rng(4);
    std::vector<ValidSubTrajectory> batch = batch_of_length(mem, kind == AgentKind::dcac ? 3 : 1, 4);
    const LossReport rep = agent.losses(batch, agent.draw_noise(batch, rng), false);
    CHECK(rep.critic_loss == 0.0);
  }
}

TEST_CASE("forced n = 0 fragment matches the hand computation") {
  PointMass env;
  ReplayMemory mem = rollout_memory(env, ChannelConfig::constant(1, 2), 20, 2);
  AgentConfig c = small_config(AgentKind::dcac);
  Rng init(5);
  Agent agent(c, env.observation_dim(), env.action_space(), 1, 2, init);
  // Move the targets away from the online critics so the loss is not trivially zero.
  Rng other(6);
  Agent shifted(c, env.observation_dim(), env.action_space(), 1, 2, other);
  agent.target_critic(0) = shifted.critic(0);
  agent.target_critic(1) = shifted.critic(1);

  const ValidSubTrajectory frag{mem.at(3).state, {}};
  const Matrix x = agent.encoder().encode(frag.start);
  const double y = std::min(agent.target_critic(0).predict(x)(0, 0), agent.target_critic(1).predict(x)(0, 0));
  const double v1 = agent.critic(0).predict(x)(0, 0), v2 = agent.critic(1).predict(x)(0, 0);
  const double expected = 0.5 * ((v1 - y) * (v1 - y) + (v2 - y) * (v2 - y));
  const LossReport rep = agent.losses({frag}, UpdateNoise{}, false);
  CHECK(rep.mean_n == 0.0);
  CHECK(rep.target[0] == doctest::Approx(y).epsilon(1e-15));
  CHECK(std::abs(rep.critic_loss - expected) < 1e-12);
}

TEST_CASE("critic and actor gradients match central differences through the 3-step chain") {
  PointMass env;
  const ChannelConfig ch = ChannelConfig::constant(1, 2);
  ReplayMemory mem = rollout_memory(env, ch, 80, 7);
  Rng init(8);
  Agent agent(small_config(AgentKind::dcac), env.observation_dim(), env.action_space(), 1, 2, init);
  // Decorrelate online and target critics so the critic loss has a real gradient.
  Rng other(9);
  Agent shifted(small_config(AgentKind::dcac), env.observation_dim(), env.action_space(), 1, 2, other);
  agent.target_critic(0) = shifted.critic(0);
  agent.target_critic(1) = shifted.critic(1);
  std::vector<ValidSubTrajectory> batch = batch_of_length(mem, 3, 4);
  Rng rng(10);
  const UpdateNoise noise = agent.draw_noise(batch, rng);
  REQUIRE(noise.size() == 3);

  const double critic_err = fd_relative_error(agent, agent.critic_parameters(), batch, noise, false);
  const double actor_err = fd_relative_error(agent, agent.policy_parameters(), batch, noise, true);
  INFO("critic ", critic_err, " actor ", actor_err);
  CHECK(critic_err < 1e-3);
  CHECK(actor_err < 1e-3);
}

TEST_CASE("sac gradients match central differences") {
  PointMass env;
  ReplayMemory mem = rollout_memory(env, ChannelConfig::constant(1, 2), 40, 11);
  for (AgentKind kind : {AgentKind::sac, AgentKind::sac_naive}) {
    Rng init(12);
    Agent agent(small_config(kind), env.observation_dim(), env.action_space(), 1, 2, init);
    Rng other(13);
    Agent shifted(small_config(kind), env.observation_dim(), env.action_space(), 1, 2, other);
    agent.target_critic(0) = shifted.critic(0);
    agent.target_critic(1) = shifted.critic(1);
    std::vector<ValidSubTrajectory> batch = batch_of_length(mem, 1, 4);
    Rng rng(14);
    const UpdateNoise noise = agent.draw_noise(batch, rng);
    CHECK(fd_relative_error(agent, agent.critic_parameters(), batch, noise, false) < 1e-3);
    CHECK(fd_relative_error(agent, agent.policy_parameters(), batch, noise, true) < 1e-3);
  }
}

TEST_CASE("actor gradient vanishes at the optimum of a one-step fixture") {
  // silu has a single stationary point z*; a critic -silu(u1 + z* - c) peaks at u1 = c.
  double z = -1.0;
  for (int i = 0; i < 60; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    const double d1 = s * (1.0 + z * (1.0 - s));
    const double d2 = s * (1.0 - s) * (2.0 + z * (1.0 - 2.0 * s));
    z -= d1 / d2;
  }
  const double c = 0.3;
  PointMass env;
  ReplayMemory mem = rollout_memory(env, ChannelConfig::constant(0, 1), 20, 15);
  AgentConfig cfg = small_config(AgentKind::dcac);
  cfg.hidden = 1;
  cfg.layers = 1;
  cfg.activation = nn::Activation::silu;
  cfg.entropy_scale = 0.0;
  cfg.reward_scale = 0.0;
  Rng init(16);
  Agent agent(cfg, env.observation_dim(), env.action_space(), 0, 1, init);
  const auto buffer_col = static_cast<Eigen::Index>(agent.encoder().buffer_offset());
  for (int i = 0; i < 2; ++i) {
    auto p = agent.critic(i).parameters();  // W1, b1, W2, b2
    p[0]->value.setZero();
    p[0]->value(buffer_col, 0) = 1.0;
    p[1]->value.setConstant(z - c);
    p[2]->value.setConstant(-1.0);
    p[3]->value.setZero();
  }
  auto pp = agent.policy_parameters();
  for (nn::Parameter* p : pp) p->value.setZero();
  std::vector<ValidSubTrajectory> batch = batch_of_length(mem, 1, 4);
  Rng rng(17);
  const UpdateNoise noise = agent.draw_noise(batch, rng);

  pp[3]->value(0, 0) = std::atanh(c);
  pp[3]->value(0, 1) = -25.0;  // log-std clamped at the floor: no gradient through it
  agent.losses(batch, noise, true);
  CHECK(norm(flatten_grads(pp)) < 1e-6);

  pp[3]->value(0, 0) = std::atanh(c) + 0.2;
  agent.losses(batch, noise, true);
  CHECK(norm(flatten_grads(pp)) > 1e-3);
}

TEST_CASE("large entropy scale aligns the actor gradient with the entropy gradient") {
  PointMass env;
  ReplayMemory mem = rollout_memory(env, ChannelConfig::constant(1, 2), 80, 18);
  std::vector<ValidSubTrajectory> batch = batch_of_length(mem, 3, 4);
  AgentConfig big = small_config(AgentKind::dcac);
  big.entropy_scale = 1e3;
  AgentConfig pure = small_config(AgentKind::dcac);
  pure.reward_scale = 0.0;
  Rng i1(19), i2(19);
  Agent a(big, env.observation_dim(), env.action_space(), 1, 2, i1);
  Agent b(pure, env.observation_dim(), env.action_space(), 1, 2, i2);
  for (int i = 0; i < 2; ++i)
    for (nn::Parameter* p : b.critic(i).parameters()) p->value.setZero();
  Rng rng(20);
  const UpdateNoise noise = a.draw_noise(batch, rng);
  a.losses(batch, noise, true);
  b.losses(batch, noise, true);
  CHECK(cosine(flatten_grads(a.policy_parameters()), flatten_grads(b.policy_parameters())) > 0.99);
}

TEST_CASE("critic target takes the smaller twin") {
  PointMass env;
  ReplayMemory mem = rollout_memory(env, ChannelConfig::constant(1, 2), 60, 21);
  AgentConfig c = small_config(AgentKind::dcac);
  c.reward_scale = 0.0;
  c.entropy_scale = 0.0;
  Rng init(22);
  Agent agent(c, env.observation_dim(), env.action_space(), 1, 2, init);
  zero_output(agent.target_critic(0), 3.0);
  zero_output(agent.target_critic(1), -1.0);
  std::vector<ValidSubTrajectory> batch = batch_of_length(mem, 2, 4);
  Rng rng(23);
  const LossReport rep = agent.losses(batch, agent.draw_noise(batch, rng), false);
  for (double y : rep.target) CHECK(y == doctest::Approx(-std::pow(c.gamma, 2)).epsilon(1e-14));
  zero_output(agent.target_critic(0), -2.0);
  const LossReport rep2 = agent.losses(batch, agent.draw_noise(batch, rng), false);
  for (double y : rep2.target) CHECK(y == doctest::Approx(-2.0 * std::pow(c.gamma, 2)).epsilon(1e-14));
}

TEST_CASE("sac and dcac targets differ on fragments with n >= 1") {
  PointMass env;
  ReplayMemory mem = rollout_memory(env, ChannelConfig::constant(1, 2), 60, 24);
  std::vector<ValidSubTrajectory> frags = batch_of_length(mem, 3, 4);
  std::vector<ValidSubTrajectory> ones = batch_of_length(mem, 1, 4);
  Rng i1(25), i2(25);
  Agent dcac(small_config(AgentKind::dcac), env.observation_dim(), env.action_space(), 1, 2, i1);
  Agent sac(small_config(AgentKind::sac), env.observation_dim(), env.action_space(), 1, 2, i2);
  Rng r1(26), r2(26);
  const LossReport a = dcac.losses(frags, dcac.draw_noise(frags, r1), false);
  const LossReport b = sac.losses(ones, sac.draw_noise(ones, r2), false);
  CHECK(a.mean_n == 3.0);
  CHECK(b.mean_n == 1.0);
  CHECK(a.target != b.target);
}

TEST_CASE("updates move targets only by polyak averaging and leave the replay untouched") {
  PointMass env;
  ReplayMemory mem = rollout_memory(env, ChannelConfig::constant(1, 2), 100, 27);
  std::vector<ReplayEntry> before;
  for (std::size_t i = 0; i < mem.size(); ++i) before.push_back(mem.at(i));
  AgentConfig c = small_config(AgentKind::dcac);
  Rng init(28);
  Agent agent(c, env.observation_dim(), env.action_space(), 1, 2, init);
  Rng rng(29);
  for (int step = 0; step < 3; ++step) {
    std::vector<Matrix> old_targets;
    for (int i = 0; i < 2; ++i)
      for (const nn::Parameter* p : std::as_const(agent.target_critic(i)).parameters()) old_targets.push_back(p->value);
    std::vector<ValidSubTrajectory> batch = batch_of_length(mem, 3, 4);
    agent.losses(batch, agent.draw_noise(batch, rng), true);
    std::size_t k = 0;
    for (int i = 0; i < 2; ++i)
      for (const nn::Parameter* p : std::as_const(agent.target_critic(i)).parameters()) CHECK(p->value == old_targets[k++]);

    agent.update(mem, rng);
    k = 0;
    for (int i = 0; i < 2; ++i) {
      auto online = std::as_const(agent.critic(i)).parameters();
      auto target = std::as_const(agent.target_critic(i)).parameters();
      for (std::size_t j = 0; j < online.size(); ++j, ++k) {
        const Matrix expected = c.tau * online[j]->value + (1.0 - c.tau) * old_targets[k];
        CHECK((target[j]->value - expected).cwiseAbs().maxCoeff() <= 1e-15);
      }
    }
  }
  for (std::size_t i = 0; i < mem.size(); ++i) {
    CHECK(mem.at(i).state == before[i].state);
    CHECK(mem.at(i).reward == before[i].reward);
    CHECK(mem.at(i).terminal == before[i].terminal);
  }
}

TEST_CASE("tabular soft critic converges to the oracle soft value") {
  FiniteMDP base = chain_mdp(2);
  base.reward = {{0.0, 0.5}, {1.0, 0.25}};
  const double gamma = 0.9, scale = 0.5;
  oracle::AugmentedFiniteMDP aug(base, DelayProcess::constant(1), DelayProcess::constant(2));
  TabularPolicy tp;
  tp.num_actions = 2;
  tp.per_obs = {{0.3, 0.7}, {0.6, 0.4}};
  const Policy pi{tp, "pi"};
  const Vector v = oracle::soft_value_iteration(aug, pi, gamma, scale, 1e-14).v;

  TabularEnv env(base);
  const Policy mu{TabularPolicy::uniform(2, 2), "mu"};
  Rng rng(30);
  ReplayMemory mem(4000);
  AugmentedState x = rdmdp_reset(env, 1, 2, rng);
  mem.start_episode(x);
  for (int t = 0; t < 3000; ++t) {
    const DelayedStep st = cdmdp_step(x, policy_sample(mu, x, rng).action, env, 1, 2, rng);
    mem.append(st.next, st.reward, st.terminal);
    x = st.next;
  }
  TabularSoftCritic critic(gamma, scale, 1.0);
  for (int u = 0; u < 10000; ++u) critic.update(sample_valid_fragment(mem, rng), pi, 2);
  double err = 0.0;
  std::size_t seen = 0;
  for (const auto& [key, value] : critic.table()) {
    for (int i = 0; i < aug.num_states(); ++i) {
      if (state_key(aug.state(i)) != key) continue;
      err = std::max(err, std::abs(value - v[static_cast<std::size_t>(i)]));
      ++seen;
    }
  }
  CHECK(seen >= 8);
  CHECK(err < 1e-3);
}

TEST_CASE("tabular soft q converges to the oracle soft action value") {
  FiniteMDP base = chain_mdp(2);
  base.reward = {{0.0, 0.5}, {1.0, 0.25}};
  const double gamma = 0.9, scale = 0.5;
  oracle::AugmentedFiniteMDP aug(base, DelayProcess::constant(0), DelayProcess::constant(1));
  TabularPolicy tp;
  tp.num_actions = 2;
  tp.per_obs = {{0.2, 0.8}, {0.5, 0.5}};
  const Policy pi{tp, "pi"};
  const Vector v = oracle::soft_value_iteration(aug, pi, gamma, scale, 1e-14).v;
  TabularSoftQ q(gamma, scale, 1.0);
  for (int sweep = 0; sweep < 10000 / (aug.num_states() * 2) + 1; ++sweep)
    for (int i = 0; i < aug.num_states(); ++i)
      for (int a = 0; a < 2; ++a)
        for (const oracle::Outcome& o : aug.row(i, a))
          q.update(aug.state(i), a, o.reward, aug.state(o.next), o.terminal, pi, 2);
  double err = 0.0;
  for (int i = 0; i < aug.num_states(); ++i)
    for (int a = 0; a < 2; ++a) {
      double expected = 0.0;
      for (const oracle::Outcome& o : aug.row(i, a))
        expected += o.prob * (o.reward + (o.terminal ? 0.0 : gamma * v[static_cast<std::size_t>(o.next)]));
      err = std::max(err, std::abs(q.value(aug.state(i), a) - expected));
    }
  CHECK(err < 1e-3);
}

TEST_CASE("rtac mode is dcac with n = 1 on alpha = 0, beta = 1") {
  PointMass env;
  const ChannelConfig ch = ChannelConfig::constant(0, 1);
  AgentConfig base = small_config(AgentKind::dcac);
  base.warmup = 100;
  base.batch_size = 8;
  const AgentConfig rt = rtac_mode(base);
  CHECK(rt.kind == AgentKind::rtac);
  CHECK(rt.max_n == 1);
  Rng init(31);
  Agent agent(rt, env.observation_dim(), env.action_space(), 0, 1, init);
  CHECK(agent.encoder().buffer_len == 1);
  ReplayMemory mem = rollout_memory(env, ch, 200, 32);
  Rng rng(33);
  for (int i = 0; i < 200; ++i) CHECK(sample_valid_fragment(mem, rng, agent.fragment_cap()).length() == 1);

  TrainOptions opt;
  opt.steps = 400;
  opt.eval_every = 200;
  opt.eval_episodes = 2;
  opt.seed = 5;
  AgentConfig forced = base;
  forced.max_n = 1;
  std::ostringstream a, b;
  train(env, ch, rt, opt, &a);
  train(env, ch, forced, opt, &b);
  CHECK(a.str() == b.str());
  CHECK_THROWS_AS(train(env, ChannelConfig::constant(2, 3), rt, opt), ConfigError);
}

TEST_CASE("training is deterministic per seed and writes the metrics schema") {
  PointMass env;
  const ChannelConfig ch = ChannelConfig::constant(1, 2);
  AgentConfig c = small_config(AgentKind::dcac);
  c.warmup = 50;
  TrainOptions opt;
  opt.steps = 300;
  opt.eval_every = 100;
  opt.eval_episodes = 2;
  opt.seed = 11;
  std::ostringstream a, b, other;
  const TrainResult r = train(env, ch, c, opt, &a);
  train(env, ch, c, opt, &b);
  opt.seed = 12;
  train(env, ch, c, opt, &other);
  CHECK(a.str() == b.str());
  CHECK(a.str() != other.str());
  CHECK(a.str().rfind("step,eval_return,critic_loss,actor_loss,mean_n,alpha_mean,beta_mean\n", 0) == 0);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].alpha_mean == 1.0);
  CHECK(r.rows[0].beta_mean == 2.0);
  CHECK(r.rows[2].mean_n > 1.0);
  CHECK(r.final_returns.size() == 2);
}

TEST_CASE("evaluation scores the first horizon environment steps") {
  OneDWorldOptions o;
  o.reward = OneDReward::pattern;
  o.num_cells = 8;
  o.horizon = 20;
  o.start = 0;
  OneDWorld env(o);
  const Policy right{ConstantPolicy{discrete_action(1)}, "right"};
  for (auto [a, b] : {std::pair{0, 1}, std::pair{2, 3}}) {
    Rng rng(40);
    const double r = evaluate_episode(env, ChannelConfig::constant(a, b), right, false, 20, rng);
    CHECK(r >= 0.0);
    CHECK(r <= 20.0);
  }
}
