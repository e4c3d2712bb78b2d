#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rdmdp/errors.hpp"
#include "rdmdp/estimators.hpp"
#include "rdmdp/finite_mdp.hpp"
#include "rdmdp/fixtures.hpp"
#include "rdmdp/rdmdp.hpp"
#include "rdmdp/replay_memory.hpp"
#include "rdmdp/resampling.hpp"

using namespace rdmdp;

namespace {

const Action L = discrete_action(0);
const Action R = discrete_action(1);

AugmentedState tab(int s, ActionBuffer u, int alpha, int beta) {
  return AugmentedState{Observation{static_cast<double>(s)}, std::move(u), alpha, beta, std::nullopt};
}

/// Rollout of a constant-delay chain under a uniform policy.
Trajectory cdmdp_rollout(int alpha, int beta, int steps, std::uint64_t seed) {
  TabularEnv env(chain_mdp(6));
  Rng rng(seed);
  Policy mu{TabularPolicy::uniform(6, 2), "uniform"};
  AugmentedState x = rdmdp_reset(env, alpha, beta, rng);
  Trajectory tr(x, "uniform");
  for (int t = 0; t < steps; ++t) {
    DelayedStep st = cdmdp_step(x, policy_sample(mu, x, rng).action, env, alpha, beta, rng);
    tr.append(TrajectoryRecord{st.next, st.reward, st.terminal});
    x = st.next;
  }
  return tr;
}

/// Random-delay trajectory with random buffers, rewards and sparse terminals.
Trajectory random_trajectory(Rng& rng, int k, int len) {
  auto random_state = [&]() {
    std::vector<Action> u;
    for (int i = 0; i < k; ++i) u.push_back(discrete_action(static_cast<int>(rng.uniform_index(2))));
    const int beta = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k)));
    const int alpha = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k - beta + 1)));
    return tab(static_cast<int>(rng.uniform_index(5)), ActionBuffer(u), alpha, beta);
  };
  Trajectory tr(random_state());
  for (int t = 0; t < len; ++t) {
    const bool terminal = t + 1 == len && rng.uniform() < 0.3;
    tr.append(TrajectoryRecord{random_state(), rng.uniform(-1.0, 1.0), terminal});
  }
  return tr;
}

}  // namespace

TEST_CASE("demo fixture: validity length two and the resampled buffers") {
  ResampleDemoFixture f = resample_demo_fixture();
  CHECK(validity_length(f.trajectory, 0) == 2);
  ValidSubTrajectory frag = fragment_at(f.trajectory, 0);
  REQUIRE(frag.length() == 2);
  Rng rng(1);
  ResampledFragment res = resample_partial(f.pi, frag.start, frag, rng);
  CHECK(res.fragment.steps[0].state.buffer == ActionBuffer({R, L, L}));
  CHECK(res.fragment.steps[1].state.buffer == ActionBuffer({R, R, L}));
  CHECK(buffer_letters(res.fragment.steps[1].state.buffer) == "(R,R,L)");
  CHECK(res.log_probs == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(fragment_at(f.trajectory, 0, 3), ContractViolation);

  std::ostringstream out;
  write_resample_demo(out, 1);
  CHECK(out.str().find("1,3,1,1,0,(L,L,L),(R,L,L)") != std::string::npos);
  CHECK(out.str().find("2,1,0,2,0,(L,L,L),(R,R,L)") != std::string::npos);
  CHECK(out.str().find("n=2") != std::string::npos);
}

TEST_CASE("validity length under constant delays") {
  Trajectory tr = cdmdp_rollout(2, 3, 40, 3);
  for (std::size_t i = 0; i + 5 <= tr.size(); ++i) CHECK(validity_length(tr, i) == 5);
  CHECK(validity_length(tr, tr.size() - 2) == 2);
  CHECK(validity_length(tr, tr.size()) == 0);

  Trajectory rt = cdmdp_rollout(0, 1, 20, 4);
  for (std::size_t i = 0; i < rt.size(); ++i) CHECK(validity_length(rt, i) == 1);
}

TEST_CASE("validity length: beta >= 1 makes the first step valid") {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    Trajectory tr = random_trajectory(rng, 1 + static_cast<int>(rng.uniform_index(4)), 6);
    CHECK(validity_length(tr, 0) >= 1);
  }
}

TEST_CASE("a terminal record closes the fragment") {
  Trajectory tr(tab(0, ActionBuffer(3, L), 1, 2));
  tr.append(TrajectoryRecord{tab(1, ActionBuffer(3, L), 1, 2), 0.0, false});
  tr.append(TrajectoryRecord{tab(2, ActionBuffer(3, L), 1, 2), 1.0, true});
  CHECK(validity_length(tr, 0) == 2);
  ValidSubTrajectory f = fragment_at(tr, 0);
  CHECK(f.ends_terminal());

  ValidSubTrajectory bad{tab(0, ActionBuffer(3, L), 1, 2), {f.steps[1], f.steps[0]}};
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("validity length never exceeds a truncation point") {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    Trajectory tr = random_trajectory(rng, 4, 8);
    const std::size_t full = validity_length(tr, 0);
    for (std::size_t cut = 0; cut <= tr.size(); ++cut) {
      Trajectory shorter(tr.start());
      for (std::size_t i = 0; i < cut; ++i) shorter.append(tr.records()[i]);
      const std::size_t n = validity_length(shorter, 0);
      CHECK(n <= cut);
      CHECK(n == std::min(full, cut));
    }
  }
}

TEST_CASE("resampling preserves observations, delays, rewards and buffer suffixes") {
  Rng rng(21);
  Policy pi{TabularPolicy::uniform(5, 2), "uniform"};
  for (int trial = 0; trial < 1000; ++trial) {
    Trajectory tr = random_trajectory(rng, 1 + static_cast<int>(rng.uniform_index(4)), 5);
    ValidSubTrajectory f = fragment_at(tr, 0);
    ResampledFragment r = resample_partial(pi, f.start, f, rng);
    REQUIRE(r.fragment.length() == f.length());
    REQUIRE(r.log_probs.size() == f.length());
    for (std::size_t t = 1; t <= f.length(); ++t) {
      const TrajectoryRecord& a = f.steps[t - 1];
      const TrajectoryRecord& b = r.fragment.steps[t - 1];
      CHECK(a.state.obs == b.state.obs);
      CHECK(a.state.obs_delay == b.state.obs_delay);
      CHECK(a.state.act_delay == b.state.act_delay);
      CHECK(a.reward == b.reward);
      CHECK(a.terminal == b.terminal);
      const std::size_t k = a.state.buffer.capacity();
      for (std::size_t i = t + 1; i <= k; ++i) CHECK(b.state.buffer[i] == f.start.buffer[i - t]);
      CHECK(b.state.buffer[1] == r.actions[t - 1]);
    }
  }
}

TEST_CASE("resampling under the deterministic behaviour policy is the identity") {
  Trajectory tr(tab(2, ActionBuffer(3, L), 2, 1));
  AugmentedState x = tr.start();
  for (int t = 0; t < 3; ++t) {
    x.buffer.push(R);
    tr.append(TrajectoryRecord{tab(2 + t, x.buffer, 2, 1), 0.5, false});
  }
  ValidSubTrajectory f = fragment_at(tr, 0);
  Rng rng(3);
  ResampledFragment r = resample_partial(Policy{ConstantPolicy{R}, "right"}, f.start, f, rng);
  CHECK(r.fragment.steps == f.steps);
}

TEST_CASE("replay memory: fragments under constant delays have n = K") {
  Trajectory tr = cdmdp_rollout(2, 3, 100, 9);
  ReplayMemory mem(1000);
  mem.start_episode(tr.start());
  for (const TrajectoryRecord& r : tr.records()) mem.append(r.state, r.reward, r.terminal);
  CHECK(mem.size() == 101);
  CHECK(mem.valid_starts() == 100);
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    ValidSubTrajectory f = sample_valid_fragment(mem, rng);
    CHECK(f.length() >= 1);
    CHECK(f.length() <= 5);
  }
  // Starts far enough from the end always reach K.
  for (std::size_t i = 0; i + 5 < mem.size(); ++i) CHECK(mem.fragment(i).length() == 5);
  CHECK(mem.fragment(10, 2).length() == 2);
}

TEST_CASE("replay memory: real-time setting gives one-step fragments") {
  Trajectory tr = cdmdp_rollout(0, 1, 50, 5);
  ReplayMemory mem(100);
  mem.start_episode(tr.start());
  for (const TrajectoryRecord& r : tr.records()) mem.append(r.state, r.reward, r.terminal);
  Rng rng(1);
  for (int i = 0; i < 500; ++i) CHECK(sample_valid_fragment(mem, rng).length() == 1);
}

TEST_CASE("replay memory: fragments never cross episodes") {
  Rng rng(17);
  ReplayMemory mem(257);
  for (int ep = 0; ep < 40; ++ep) {
    const int len = 1 + static_cast<int>(rng.uniform_index(12));
    const bool ends_terminal = rng.uniform() < 0.5;
    mem.start_episode(tab(0, ActionBuffer(4, L), 2, 2));
    for (int t = 1; t <= len; ++t)
      mem.append(tab(t, ActionBuffer(4, L), 2, 2), 1.0, ends_terminal && t == len);
  }
  std::size_t counted = 0;
  for (std::size_t i = 0; i < mem.size(); ++i) counted += mem.is_valid_start(i) ? 1 : 0;
  CHECK(counted == mem.valid_starts());
  for (int i = 0; i < 10000; ++i) {
    ValidSubTrajectory f = sample_valid_fragment(mem, rng);
    REQUIRE(f.length() >= 1);
    CHECK_NOTHROW(f.validate());
    // Cells count up within an episode, so the fragment is contiguous.
    int cell = observation_index(f.start.obs);
    for (const TrajectoryRecord& r : f.steps) CHECK(observation_index(r.state.obs) == ++cell);
  }
}

TEST_CASE("replay memory errors") {
  ReplayMemory mem(4);
  Rng rng(1);
  CHECK_THROWS_AS(sample_valid_fragment(mem, rng), EmptyStoreError);
  CHECK_THROWS_AS(mem.append(tab(0, ActionBuffer(1, L), 0, 1), 0.0, false), ContractViolation);
  mem.start_episode(tab(0, ActionBuffer(1, L), 0, 1));
  CHECK_THROWS_AS(sample_valid_fragment(mem, rng), EmptyStoreError);
  mem.append(tab(1, ActionBuffer(1, L), 0, 1), 0.0, true);
  CHECK(mem.valid_starts() == 1);
  CHECK_THROWS_AS(mem.append(tab(2, ActionBuffer(1, L), 0, 1), 0.0, false), ContractViolation);
  for (int i = 0; i < 5; ++i) mem.start_episode(tab(0, ActionBuffer(1, L), 0, 1));
  CHECK(mem.size() == 4);
  CHECK(mem.valid_starts() == 0);
}

TEST_CASE("v_hat_n examples") {
  ValueFunction four = ValueFunction::constant(4.0);
  AugmentedState x0 = tab(0, ActionBuffer(2, L), 1, 1);
  ValidSubTrajectory empty{x0, {}};
  CHECK(v_hat_n(x0, empty, four, 0.9) == 4.0);

  ValidSubTrajectory two{x0, {{tab(1, ActionBuffer(2, L), 1, 1), 1.0, false}, {tab(2, ActionBuffer(2, L), 1, 1), 1.0, false}}};
  CHECK(v_hat_n(x0, two, four, 0.5) == 2.5);
  two.steps[1].terminal = true;
  CHECK(v_hat_n(x0, two, four, 0.5) == 1.5);
}

TEST_CASE("v_hat_soft_n examples") {
  AugmentedState x0 = tab(0, ActionBuffer(1, L), 0, 1);
  ValidSubTrajectory one{x0, {{tab(1, ActionBuffer(1, L), 0, 1), 2.0, false}}};
  EstimateReport rep = v_hat_soft_n(x0, one, {std::log(0.5)}, ValueFunction::constant(0.0), 0.9, 1.0);
  CHECK(rep.estimate == doctest::Approx(2.6931471805599454).epsilon(1e-15));
  CHECK(rep.n_used == 1);
  CHECK(rep.entropy_terms.size() == 1);

  const ValueFunction v = ValueFunction::constant(3.0);
  CHECK(v_hat_soft_n(x0, one, {0.0}, v, 0.9, 1.0).estimate == v_hat_n(x0, one, v, 0.9));
  CHECK(v_hat_soft_n(x0, one, {-1.7}, v, 0.9, 0.0).estimate == v_hat_n(x0, one, v, 0.9));
  CHECK_THROWS_AS(v_hat_soft_n(x0, one, {}, v, 0.9, 1.0), std::invalid_argument);
}

TEST_CASE("q_hat_1 examples") {
  AugmentedState x = tab(0, ActionBuffer(1, L), 0, 1), y = tab(1, ActionBuffer(1, R), 0, 1);
  Policy pi{TabularPolicy::uniform(2, 2), "uniform"};
  Rng rng(1);
  ActionValueFn q = [](const AugmentedState&, const Action& a) { return 10.0 + action_index(a); };
  ActionValueFn zero = [](const AugmentedState&, const Action&) { return 0.0; };
  CHECK(q_hat_1(x, R, y, 0.7, false, q, pi, 0.0, rng) == 0.7);
  CHECK(q_hat_1(x, R, y, 0.7, false, zero, pi, 0.9, rng) == 0.7);
  CHECK(q_hat_1(x, R, y, 0.7, true, q, pi, 0.9, rng) == 0.7);
  CHECK(q_hat_1_exact(x, R, y, 0.7, false, q, pi, 2, 0.5) == doctest::Approx(0.7 + 0.5 * 10.5));
}

TEST_CASE("value functions") {
  std::unordered_map<StateKey, double, StateKeyHash> table;
  AugmentedState x = tab(0, ActionBuffer(1, L), 0, 1);
  table[state_key(x)] = 2.0;
  ValueFunction v = ValueFunction::tabular(table);
  CHECK(v(x) == 2.0);
  CHECK(v.with_bias(0.5)(x) == 2.5);
  CHECK_THROWS_AS(v(tab(1, ActionBuffer(1, L), 0, 1)), std::out_of_range);
}
