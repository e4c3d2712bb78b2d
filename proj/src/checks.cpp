#include "rdmdp/checks.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rdmdp/agents.hpp"
#include "rdmdp/channel.hpp"
#include "rdmdp/csv.hpp"
#include "rdmdp/envs.hpp"
#include "rdmdp/finite_mdp.hpp"
#include "rdmdp/fixtures.hpp"
#include "rdmdp/oracle.hpp"
#include "rdmdp/rdmdp.hpp"
#include "rdmdp/resampling.hpp"

namespace rdmdp {

namespace {

using oracle::AugmentedFiniteMDP;

Policy random_policy(const AugmentedFiniteMDP& aug, Rng& rng, const char* id) {
  return Policy{oracle::random_tabular_policy(aug, rng, false), id};
}

CheckResult finish(std::string name, double error, double tol, std::string detail = "") {
  return CheckResult{std::move(name), error, tol, error <= tol, std::move(detail)};
}

bool same_core(const AugmentedState& a, const AugmentedState& b) {
  return a.obs == b.obs && a.buffer == b.buffer && a.obs_delay == b.obs_delay && a.act_delay == b.act_delay;
}

// Replay from a uniform-random channel rollout.
ReplayMemory rollout(const Environment& env, const ChannelConfig& ch, long steps, Rng& rng) {
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

std::vector<ValidSubTrajectory> fragments_of_length(const ReplayMemory& mem, std::size_t n, std::size_t count) {
  std::vector<ValidSubTrajectory> out;
  for (std::size_t i = 0; i < mem.size() && out.size() < count; ++i) {
    if (!mem.is_valid_start(i)) continue;
    ValidSubTrajectory f = mem.fragment(i, n);
    if (f.length() == n) out.push_back(std::move(f));
  }
  return out;
}

double relative_error(Agent& agent, const std::vector<nn::Parameter*>& params,
                      const std::vector<ValidSubTrajectory>& batch, const UpdateNoise& noise, bool actor) {
  agent.losses(batch, noise, true);
  std::vector<double> analytic, numeric;
  for (const nn::Parameter* p : params)
    for (Eigen::Index i = 0; i < p->grad.size(); ++i) analytic.push_back(p->grad.data()[i]);
  const double h = 1e-5;
  for (nn::Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double keep = p->value.data()[i];
      p->value.data()[i] = keep + h;
      const LossReport up = agent.losses(batch, noise, false);
      p->value.data()[i] = keep - h;
      const LossReport down = agent.losses(batch, noise, false);
      p->value.data()[i] = keep;
      numeric.push_back(((actor ? up.actor_loss : up.critic_loss) - (actor ? down.actor_loss : down.critic_loss)) /
                        (2.0 * h));
    }
  }
  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn_ += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(std::max(na, nn_)), 1e-300);
}

}  // namespace

std::vector<BiasRow> bias_ratio_rows(double gamma, const std::vector<int>& ns, std::uint64_t seed) {
  Rng rng(seed);
  AugmentedFiniteMDP aug(random_finite_mdp(3, 2, rng), DelayProcess::constant(2), DelayProcess::constant(3));
  oracle::BiasFixture on{&aug, random_policy(aug, rng, "pi"), std::nullopt, 5};
  oracle::BiasFixture off = on;
  off.mu = random_policy(aug, rng, "mu");
  std::vector<BiasRow> rows;
  for (int n : ns) {
    rows.push_back({n, gamma, false, oracle::measure_bias_reduction(on, 1.0, n, gamma), std::pow(gamma, n)});
    rows.push_back({n, gamma, true, oracle::measure_bias_reduction(off, 1.0, n, gamma), std::pow(gamma, n)});
  }
  return rows;
}

void write_bias_rows(std::ostream& out, const std::vector<BiasRow>& rows) {
  out << "n,gamma,policy,measured_ratio,expected_ratio\n";
  for (const BiasRow& r : rows)
    out << r.n << ',' << format_double(r.gamma) << ',' << (r.off_policy ? "resampled" : "on") << ','
        << format_double(r.measured) << ',' << format_double(r.expected) << '\n';
}

CheckResult unbiasedness_check(std::uint64_t seed) {
  Rng rng(seed);
  double err = 0.0;
  long checked = 0;
  for (int ns : {2, 3}) {
    FiniteMDP base = random_finite_mdp(ns, 2, rng);
    AugmentedFiniteMDP aug(base, DelayProcess::uniform(0, 1, 0), DelayProcess::uniform(1, 2, 1));
    const Policy pi = random_policy(aug, rng, "pi");
    const Policy mu = random_policy(aug, rng, "mu");
    const double gamma = 0.9;
    const Vector v = oracle::evaluate_exact(aug, pi, gamma);
    for (int x0 = 0; x0 < aug.num_states(); ++x0) {
      const double target = v[static_cast<std::size_t>(x0)];
      for (int n = 0; n <= 3; ++n, ++checked)
        err = std::max(err, std::abs(oracle::expected_v_hat_n(aug, pi, nullptr, x0, n, v, gamma) - target));
      const int nv = oracle::max_valid_horizon(aug, mu, x0, 3);
      for (int n = 1; n <= nv; ++n, ++checked)
        err = std::max(err, std::abs(oracle::expected_v_hat_n(aug, pi, &mu, x0, n, v, gamma) - target));
    }
  }
  return finish("unbiased n-step estimate", err, 1e-12, std::to_string(checked) + " (state, n) pairs");
}

CheckResult steady_state_bias_check(double gamma, std::uint64_t seed) {
  Rng rng(seed);
  AugmentedFiniteMDP aug(random_finite_mdp(3, 2, rng), DelayProcess::constant(1), DelayProcess::constant(1));
  const Policy pi = random_policy(aug, rng, "pi");
  const Vector v = oracle::evaluate_exact(aug, pi, gamma);
  Vector start(static_cast<std::size_t>(aug.num_states()), 0.0);
  for (auto [i, p] : aug.initial()) start[static_cast<std::size_t>(i)] = p;
  const Vector d = oracle::steady_state(aug, pi, start);
  Vector bias(v.size()), v0(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    bias[i] = rng.uniform(-1.0, 1.0);
    v0[i] = v[i] + bias[i];
  }
  double base = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) base += d[i] * bias[i];
  double err = 0.0;
  for (int n = 1; n <= 5; ++n) {
    double nstep = 0.0;
    for (int i = 0; i < aug.num_states(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (d[k] > 0.0) nstep += d[k] * (oracle::expected_v_hat_n(aug, pi, nullptr, i, n, v0, gamma) - v[k]);
    }
    err = std::max(err, std::abs(nstep / base - std::pow(gamma, n)));
  }
  return finish("steady-state bias ratio", err, 1e-10, "n = 1..5");
}

CheckResult validity_demo_check() {
  const ResampleDemoFixture f = resample_demo_fixture();
  const std::size_t n = validity_length(f.trajectory, 0);
  std::string b1, b2;
  if (n >= 2) {
    Rng rng(1);
    const ValidSubTrajectory frag = fragment_at(f.trajectory, 0);
    const ResampledFragment res = resample_partial(f.pi, frag.start, frag, rng);
    b1 = buffer_letters(res.fragment.steps[0].state.buffer);
    b2 = buffer_letters(res.fragment.steps[1].state.buffer);
  }
  const bool ok = n == 2 && b1 == "(R,L,L)" && b2 == "(R,R,L)";
  return CheckResult{"validity walkthrough", ok ? 0.0 : 1.0, 0.0, ok,
                     "n=" + std::to_string(n) + " u1=" + b1 + " u2=" + b2};
}

CheckResult channel_equivalence_check(long steps, std::uint64_t seed) {
  PointMassOptions o;
  o.noise = 0.05;
  o.horizon = 0;
  const PointMass env(o);
  const Policy pi{UniformPolicy{env.action_space()}, "uniform"};
  long mismatches = 0, compared = 0;
  for (auto [a, b] : {std::pair{0, 1}, std::pair{2, 3}, std::pair{1, 1}, std::pair{3, 2}}) {
    Rng root(seed + static_cast<std::uint64_t>(a * 10 + b));
    const ChannelEpisode ep = channel_simulate(env, pi, ChannelConfig::constant(a, b), steps, root);
    Rng ref(seed + static_cast<std::uint64_t>(a * 10 + b));
    Rng agent = ref.split();
    Rng env_rng = ref.split();
    AugmentedState x = rdmdp_reset(env, a, b, env_rng);
    if (!same_core(ep.rows[0].state, x)) ++mismatches;
    for (long t = 0; t < steps && static_cast<std::size_t>(t + 1) < ep.rows.size(); ++t, ++compared) {
      const PolicySample s = policy_sample(pi, x, agent);
      const DelayedStep st = cdmdp_step(x, s.action, env, a, b, env_rng);
      const ChannelLogRow& row = ep.rows[static_cast<std::size_t>(t + 1)];
      if (!(s.action == ep.rows[static_cast<std::size_t>(t)].action) || !same_core(row.state, st.next) ||
          row.reward != st.reward || row.terminal != st.terminal)
        ++mismatches;
      x = st.next;
    }
  }
  return finish("constant channel == cdmdp", static_cast<double>(mismatches), 0.0,
                std::to_string(compared) + " steps compared");
}

CheckResult reward_telescoping_check(int episodes, std::uint64_t seed) {
  OneDWorldOptions o;
  o.num_cells = 12;
  o.reward = OneDReward::delta;
  o.horizon = 0;
  o.start = 0;
  o.slip = 0.2;
  const OneDWorld env(o);
  const Policy pi{TabularPolicy::uniform(12, 2), "uniform"};
  const ChannelConfig cfg =
      ChannelConfig::from_processes(DelayProcess::uniform(0, 3, 0), DelayProcess::uniform(1, 2, 1));
  double err = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(seed + static_cast<std::uint64_t>(e));
    const ChannelEpisode ep = channel_simulate(env, pi, cfg, 100000, rng);
    double delayed = 0.0, undelayed = 0.0;
    for (std::size_t i = 1; i < ep.rows.size(); ++i) delayed += ep.rows[i].reward;
    for (const UndelayedRecord& u : ep.undelayed) undelayed += u.reward;
    err = std::max(err, std::abs(delayed - undelayed));
  }
  return finish("reward telescoping", err, 1e-12, std::to_string(episodes) + " episodes");
}

CheckResult delay_growth_check(long steps, std::uint64_t seed) {
  Rng rng(seed);
  const TabularEnv env(random_finite_mdp(3, 2, rng));
  const DelayProcess pa = DelayProcess::uniform(0, 3, 0);
  const DelayProcess pb = DelayProcess::uniform(1, 3, 1);
  AugmentedState x = rdmdp_reset(env, pa.max_delay(), pb.max_delay(), rng);
  long violations = 0;
  for (long t = 0; t < steps; ++t) {
    const DelayedStep st = rdmdp_step(x, discrete_action(static_cast<int>(rng.uniform_index(2))), env, pa, pb, rng);
    if (st.next.obs_delay > x.obs_delay + 1) ++violations;
    x = st.next;
  }
  return finish("delay growth bound", static_cast<double>(violations), 0.0, std::to_string(steps) + " steps");
}

std::vector<GradientReport> gradient_check(std::uint64_t seed) {
  const PointMass env;
  std::vector<GradientReport> out;
  for (AgentKind kind : {AgentKind::dcac, AgentKind::sac}) {
    AgentConfig c;
    c.kind = kind;
    c.hidden = 8;
    c.layers = 2;
    c.activation = nn::Activation::tanh;
    Rng rng(seed);
    const ReplayMemory mem = rollout(env, ChannelConfig::constant(1, 2), 80, rng);
    Rng init = rng.split(), other = rng.split();
    Agent agent(c, env.observation_dim(), env.action_space(), 1, 2, init);
    // Targets from an independent draw so the critic loss has a real gradient.
    const Agent shifted(c, env.observation_dim(), env.action_space(), 1, 2, other);
    for (int i = 0; i < c.num_critics; ++i) agent.target_critic(i) = shifted.critic(i);
    const auto batch = fragments_of_length(mem, kind == AgentKind::dcac ? 3 : 1, 4);
    const UpdateNoise noise = agent.draw_noise(batch, rng);
    GradientReport r;
    r.agent = agent_kind_name(kind);
    r.critic_rel_error = relative_error(agent, agent.critic_parameters(), batch, noise, false);
    r.actor_rel_error = relative_error(agent, agent.policy_parameters(), batch, noise, true);
    out.push_back(r);
  }
  return out;
}

}  // namespace rdmdp
