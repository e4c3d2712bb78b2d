#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rdmdp/channel.hpp"
#include "rdmdp/envs.hpp"
#include "rdmdp/errors.hpp"
#include "rdmdp/finite_mdp.hpp"
#include "rdmdp/rdmdp.hpp"

using namespace rdmdp;

namespace {

const Action L = discrete_action(0);
const Action R = discrete_action(1);

/// Chain where every step pays `per_step` so accumulated rewards count steps.
FiniteMDP paying_chain(int n, double per_step) {
  FiniteMDP m = chain_mdp(n);
  for (auto& row : m.reward) row.assign(2, per_step);
  return m;
}

AugmentedState make_state(int s, std::vector<Action> buffer, int alpha, int beta) {
  return AugmentedState{Observation{static_cast<double>(s)}, ActionBuffer(std::move(buffer)), alpha, beta, std::nullopt};
}

bool same_core(const AugmentedState& a, const AugmentedState& b) {
  return a.obs == b.obs && a.buffer == b.buffer && a.obs_delay == b.obs_delay && a.act_delay == b.act_delay;
}

}  // namespace

TEST_CASE("buffer_push examples") {
  ActionBuffer u(3, L);
  ActionBuffer v = buffer_push(u, R);
  CHECK(v == ActionBuffer({R, L, L}));

  const Action a0{0.5}, a1{-0.5}, a0p{0.25}, a2{0.75};
  CHECK(buffer_push(ActionBuffer({a1}), a0) == ActionBuffer({a0}));
  CHECK(buffer_push(buffer_push(ActionBuffer({a1, a2}), a0), a0p) == ActionBuffer({a0p, a0}));
}

TEST_CASE("buffer shift law on random buffers") {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(6);
    std::vector<Action> entries;
    for (std::size_t i = 0; i < k; ++i) entries.push_back(Action{rng.uniform()});
    ActionBuffer u(entries);
    const Action a{rng.uniform()};
    ActionBuffer v = buffer_push(u, a);
    REQUIRE(v.capacity() == k);
    CHECK(v[1] == a);
    for (std::size_t i = 2; i <= k; ++i) CHECK(v[i] == u[i - 1]);
  }
}

TEST_CASE("f_delta base case returns the input unchanged") {
  TabularEnv env(chain_mdp(5));
  Rng rng(1);
  AugmentedState x = make_state(2, {R, L, R}, 1, 2);
  FDeltaSample f = f_delta_sample(-1, x, L, env, DelayProcess::constant(2), rng);
  CHECK(f.obs == x.obs);
  CHECK(f.act_delay == 2);
  CHECK(f.reward == 0.0);
  CHECK_THROWS_AS(f_delta_sample(-2, x, L, env, DelayProcess::constant(2), rng), std::invalid_argument);
}

TEST_CASE("f_delta one level matches a single undelayed step") {
  FiniteMDP m = chain_mdp(5, 3.0);
  TabularEnv env(m);
  Rng rng(1), ref(1);
  // alpha = 1, beta' = 2 -> applies u[3].
  AugmentedState x = make_state(3, {L, L, R}, 1, 2);
  FDeltaSample f = f_delta_sample(0, x, L, env, DelayProcess::constant(2), rng);
  EnvStep direct = finite_mdp_step(m, 3, 1, ref);
  CHECK(f.obs == direct.next_observation);
  CHECK(f.reward == direct.reward);
  CHECK(observation_index(f.obs) == 4);
}

TEST_CASE("f_delta two levels accumulate both rewards") {
  TabularEnv env(paying_chain(6, 1.0));
  Rng rng(1);
  AugmentedState x = make_state(1, {R, R, R}, 2, 1);
  FDeltaSample f = f_delta_sample(1, x, L, env, DelayProcess::constant(1), rng);
  CHECK(f.reward == 2.0);
  CHECK(observation_index(f.obs) == 3);
}

TEST_CASE("f_delta rejects buffer indices beyond K") {
  TabularEnv env(chain_mdp(4));
  Rng rng(1);
  AugmentedState x = make_state(1, {R, R}, 1, 1);
  CHECK_THROWS_AS(f_delta_sample(0, x, L, env, DelayProcess::constant(3), rng), ContractViolation);
}

TEST_CASE("rdmdp_step with constant delays applies u[alpha+beta]") {
  FiniteMDP m = chain_mdp(8);
  TabularEnv env(m);
  Rng rng(2);
  AugmentedState x = make_state(4, {L, L, L, L, R}, 2, 3);
  DelayedStep st = rdmdp_step(x, L, env, DelayProcess::constant(2), DelayProcess::constant(3), rng);
  CHECK(st.next.obs_delay == 2);
  CHECK(st.next.act_delay == 3);
  CHECK(observation_index(st.next.obs) == 5);  // u[5] = R
  CHECK(st.next.buffer == ActionBuffer({L, L, L, L, L}));
}

TEST_CASE("rdmdp_step repeats the observation when alpha grows") {
  TabularEnv env(chain_mdp(5));
  std::vector<Vector> rows = {{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}};
  DelayProcess p_alpha = DelayProcess::conditional(rows, 0);
  p_alpha.validate_observation();
  Rng rng(3);
  AugmentedState x = make_state(2, {L, L, L, L}, 0, 2);
  DelayedStep st = rdmdp_step(x, R, env, p_alpha, DelayProcess::constant(2), rng);
  CHECK(st.next.obs_delay == 1);
  CHECK(st.next.obs == x.obs);
  CHECK(st.reward == 0.0);
  CHECK(st.next.act_delay == 2);
}

TEST_CASE("rdmdp_step sums skipped rewards when alpha drops") {
  FiniteMDP m = chain_mdp(6);
  for (int s = 0; s < 6; ++s) m.reward[s] = {0.1 * s, 0.1 * s + 1.0};
  TabularEnv env(m);
  std::vector<Vector> to_zero(3, Vector{1.0, 0.0, 0.0});
  DelayProcess p_alpha = DelayProcess::conditional(to_zero, 0);
  Rng rng(9);
  // alpha 1 -> 0, beta 1: applies u[1 + 1] then u[0 + 1].
  AugmentedState x = make_state(2, {R, L, R}, 1, 1);
  DelayedStep st = rdmdp_step(x, L, env, p_alpha, DelayProcess::constant(1), rng);
  // Bookkeeping of the undelayed rollout: from 2 apply L (u[2]) then R (u[1]).
  const double expected = m.reward[2][0] + m.reward[1][1];
  CHECK(st.reward == expected);
  CHECK(observation_index(st.next.obs) == 2);
}

TEST_CASE("rdmdp_step refuses jumps in the observation delay") {
  TabularEnv env(chain_mdp(4));
  std::vector<Vector> jump = {{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}};
  DelayProcess p_alpha = DelayProcess::conditional(jump, 0);
  CHECK_THROWS_AS(p_alpha.validate_observation(), std::invalid_argument);
  Rng rng(1);
  AugmentedState x = make_state(1, {L, L, L}, 0, 1);
  CHECK_THROWS_AS(rdmdp_step(x, L, env, p_alpha, DelayProcess::constant(1), rng), ContractViolation);
}

TEST_CASE("cdmdp_step equals rdmdp_step under Dirac processes") {
  Rng gen(12);
  TabularEnv env(random_finite_mdp(4, 3, gen));
  const int a = 2, b = 3;
  DelayProcess pa = DelayProcess::constant(a), pb = DelayProcess::constant(b);
  Rng r1(77), r2(77), actions(5);
  AugmentedState x1 = rdmdp_reset(env, a, b, r1);
  AugmentedState x2 = rdmdp_reset(env, a, b, r2);
  for (int t = 0; t < 10000; ++t) {
    const Action act = discrete_action(static_cast<int>(actions.uniform_index(3)));
    DelayedStep s1 = rdmdp_step(x1, act, env, pa, pb, r1);
    DelayedStep s2 = cdmdp_step(x2, act, env, a, b, r2);
    REQUIRE(s1.next == s2.next);
    REQUIRE(s1.reward == s2.reward);
    x1 = s1.next;
    x2 = s2.next;
  }
}

TEST_CASE("cdmdp_step in the real-time setting") {
  TabularEnv env(chain_mdp(5));
  Rng rng(1);
  AugmentedState x = make_state(2, {R}, 0, 1);
  DelayedStep st = cdmdp_step(x, L, env, 0, 1, rng);
  CHECK(observation_index(st.next.obs) == 3);
  CHECK(st.next.buffer == ActionBuffer({L}));
  // K = alpha + beta: the oldest entry is the applied one.
  AugmentedState y = make_state(2, {L, L, R}, 1, 2);
  CHECK(observation_index(cdmdp_step(y, L, env, 1, 2, rng).next.obs) == 3);
}

TEST_CASE("terminal inside an unroll stops it") {
  FiniteMDP m = chain_mdp(4);
  m.terminal[3] = true;
  for (auto& row : m.reward) row.assign(2, 1.0);
  TabularEnv env(m);
  Rng rng(1);
  AugmentedState x = make_state(2, {R, R, R, R}, 3, 1);
  FDeltaSample f = f_delta_sample(3, x, R, env, DelayProcess::constant(1), rng);
  CHECK(f.terminal);
  CHECK(f.reward == 1.0);
  CHECK(observation_index(f.obs) == 3);
}

TEST_CASE("delay growth bound over random-delay rollouts") {
  Rng rng(21);
  TabularEnv env(random_finite_mdp(3, 2, rng));
  DelayProcess pa = DelayProcess::uniform(0, 3, 0);
  DelayProcess pb = DelayProcess::uniform(1, 3, 1);
  pa.validate_observation();
  AugmentedState x = rdmdp_reset(env, pa.max_delay(), pb.max_delay(), rng);
  for (int t = 0; t < 100000; ++t) {
    DelayedStep st = rdmdp_step(x, discrete_action(static_cast<int>(rng.uniform_index(2))), env, pa, pb, rng);
    REQUIRE(st.next.obs_delay <= x.obs_delay + 1);
    if (st.next.obs_delay == x.obs_delay + 1) {
      REQUIRE(st.reward == 0.0);
      REQUIRE(st.next.obs == x.obs);
    }
    x = st.next;
  }
}

TEST_CASE("histogram processes") {
  std::istringstream in("# wifi\ndelay_ticks,count\n1,50\n2,30\n3,20\n");
  DelayProcess p = parse_delay_histogram(in, 3, 0);
  REQUIRE(p.marginal());
  const Vector& m = *p.marginal();
  CHECK(m[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m[2] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(m[3] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_NOTHROW(p.validate_observation());

  std::istringstream clip("1,1\n10,3\n");
  DelayProcess q = parse_delay_histogram(clip, 4, 0);
  CHECK((*q.marginal())[4] == doctest::Approx(0.75));

  std::istringstream single("2,9\n");
  DelayProcess d = parse_delay_histogram(single, 4, 0);
  CHECK(d.kind() == DelayKind::constant);
  CHECK(d.is_dirac());
  CHECK(d.max_delay() == 2);

  std::istringstream negative("1,5\n2,-1\n");
  try {
    parse_delay_histogram(negative, 4, 0);
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream malformed("1,5\nx,2\n");
  CHECK_THROWS_AS(parse_delay_histogram(malformed, 4, 0), ParseError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(parse_delay_histogram(empty, 4, 0), ParseError);
}

TEST_CASE("hazard rows reproduce the marginal as the stationary law of fresh arrivals") {
  DelayProcess p = DelayProcess::histogram(Vector{0.0, 0.5, 0.3, 0.2}, 1);
  for (int d = 1; d <= 3; ++d) {
    const Vector& row = p.row(d);
    double total = 0.0;
    for (double v : row) total += v;
    CHECK(std::abs(total - 1.0) <= 1e-12);
    for (int k = d + 2; k <= 3; ++k) CHECK(row[static_cast<std::size_t>(k)] == 0.0);
  }
  CHECK(p.row(1)[1] == doctest::Approx(0.5));
  CHECK(p.row(1)[2] == doctest::Approx(0.5));
}

namespace {

void compare_channel_with_cdmdp(const Environment& env, const Policy& pi, const ChannelConfig& cfg, int a, int b,
                                long ticks, std::uint64_t seed) {
  Rng root(seed);
  ChannelEpisode ep = channel_simulate(env, pi, cfg, ticks, root);
  Rng ref(seed);
  Rng agent = ref.split();
  Rng env_rng = ref.split();
  AugmentedState x = rdmdp_reset(env, a, b, env_rng);
  REQUIRE(same_core(ep.rows[0].state, x));
  for (long t = 0; t < ticks; ++t) {
    PolicySample s = policy_sample(pi, x, agent);
    REQUIRE(s.action == ep.rows[static_cast<std::size_t>(t)].action);
    DelayedStep st = cdmdp_step(x, s.action, env, a, b, env_rng);
    const ChannelLogRow& row = ep.rows[static_cast<std::size_t>(t + 1)];
    REQUIRE(same_core(row.state, st.next));
    REQUIRE(row.reward == st.reward);
    REQUIRE(row.terminal == st.terminal);
    x = st.next;
    if (st.terminal) break;
  }
}

}  // namespace

TEST_CASE("constant-latency channel matches a cdmdp rollout bit-exactly") {
  PointMass env(PointMassOptions{0.1, 1.0, 0.0, 1.0, 1.0, 0.05, 0});
  Policy pi{UniformPolicy{env.action_space()}, "uniform"};
  for (auto [a, b] : {std::pair{0, 1}, std::pair{2, 3}, std::pair{1, 1}, std::pair{3, 2}})
    compare_channel_with_cdmdp(env, pi, ChannelConfig::constant(a, b), a, b, 2000, 100 + a * 10 + b);
}

TEST_CASE("maximal latencies forever behave as the constant-delay MDP at the maxima") {
  PointMass env(PointMassOptions{0.1, 1.0, 0.0, 1.0, 1.0, 0.05, 0});
  Policy pi{UniformPolicy{env.action_space()}, "uniform"};
  compare_channel_with_cdmdp(env, pi, ChannelConfig::from_traces(2, 3, {2}, {3}), 2, 3, 1000, 5);
}

TEST_CASE("random latencies: invariants of the channel") {
  OneDWorld env(OneDWorldOptions{12, 0, OneDReward::delta, 0, 0.2, false, false});
  Policy pi{TabularPolicy::uniform(12, 2), "uniform"};
  DelayProcess pa = DelayProcess::uniform(0, 3, 0), pb = DelayProcess::uniform(1, 2, 1);
  ChannelConfig cfg = ChannelConfig::from_processes(pa, pb);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    ChannelEpisode ep = channel_simulate(env, pi, cfg, 100000, rng);
    REQUIRE(ep.rows.back().terminal);
    double delayed = 0.0, undelayed = 0.0;
    for (std::size_t i = 1; i < ep.rows.size(); ++i) {
      const AugmentedState& prev = ep.rows[i - 1].state;
      const AugmentedState& cur = ep.rows[i].state;
      delayed += ep.rows[i].reward;
      REQUIRE(cur.obs_delay <= prev.obs_delay + 1);
      // Capture ticks of the held observation never move backwards.
      REQUIRE(static_cast<long>(ep.rows[i].tick) - cur.obs_delay >= static_cast<long>(ep.rows[i - 1].tick) - prev.obs_delay);
      REQUIRE(cur.kappa);
      REQUIRE(*cur.kappa >= 0);
      REQUIRE(*cur.kappa <= cur.act_delay);
      if (cur.obs_delay == prev.obs_delay + 1) {
        REQUIRE(ep.rows[i].reward == 0.0);
        REQUIRE(cur.obs == prev.obs);
      }
    }
    for (const UndelayedRecord& u : ep.undelayed) undelayed += u.reward;
    CHECK(std::abs(delayed - undelayed) <= 1e-12);
  }
}

TEST_CASE("over-maximum traces overflow after K ticks") {
  PointMass env;
  Policy pi{UniformPolicy{env.action_space()}, "uniform"};
  ChannelConfig cfg = ChannelConfig::from_traces(1, 1, {5}, {1});
  Rng rng(1);
  CHECK_THROWS_AS(channel_simulate(env, pi, cfg, 50, rng), ChannelOverflow);

  // Occasional over-maximum latencies are absorbed.
  ChannelConfig sparse = ChannelConfig::from_traces(1, 2, {0, 0, 4, 1, 0}, {1, 2, 5, 1});
  Rng rng2(2);
  CHECK_NOTHROW(channel_simulate(env, pi, sparse, 500, rng2));
}

TEST_CASE("episode log csv") {
  PointMass env;
  Policy pi{UniformPolicy{env.action_space()}, "uniform"};
  Rng rng(3);
  ChannelEpisode ep = channel_simulate(env, pi, ChannelConfig::constant(1, 2), 3, rng);
  std::ostringstream out;
  write_episode_log(out, ep);
  std::istringstream lines(out.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "tick,alpha,beta,kappa,reward,terminal");
  CHECK(first == "0,1,2,2,0,0");
}
