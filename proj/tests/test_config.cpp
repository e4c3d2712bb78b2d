#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rdmdp/bench.hpp"
#include "rdmdp/config.hpp"
#include "rdmdp/envs.hpp"
#include "rdmdp/errors.hpp"

using namespace rdmdp;

namespace {

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config_string(text, overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("an empty agent section gives the published defaults") {
  const RunConfig c = parse_config_string("[agent]\n");
  CHECK(c.agent.lr == 0.0003);
  CHECK(c.agent.gamma == 0.99);
  CHECK(c.agent.batch_size == 128);
  CHECK(c.agent.reward_scale == 5.0);
  CHECK(c.agent.entropy_scale == 1.0);
  CHECK(c.agent.tau == 0.005);
  CHECK(c.agent.memory_size == 1000000);
  CHECK(c.agent.warmup == 10000);
  CHECK(c.agent == AgentConfig{});
}

TEST_CASE("histogram delays need a file") {
  const std::string e = error_of("[delays]\nkind = histogram\nmax_alpha = 2\nmax_beta = 3\n");
  CHECK(contains(e, "delays.file"));
}

TEST_CASE("serialize(parse(text)) is a fixed point") {
  const std::string text =
      "# desk run\n[env]\nid = oned\nreward = gust\ncells = 8\none_hot = true\ncontinuous = true\n"
      "[delays]\nkind = uniform\nalpha_min = 0\nalpha_max = 2\nbeta_min = 1\nbeta_max = 3\n"
      "[agent]\nkind = sac-naive\nhidden = 64 ; narrow\nlr = 0.001\n"
      "[run]\nseed = 7\nsteps = 5000\neval = sample\n[bench]\nagents = sac sac-naive\ndelays = 0:1, 2:3\nseeds = 4\n";
  const RunConfig c = parse_config_string(text);
  CHECK(c.env.oned.reward == OneDReward::gust);
  CHECK(c.agent.kind == AgentKind::sac_naive);
  CHECK(c.agent.hidden == 64);
  CHECK(c.eval_stochastic);
  CHECK(c.bench.delays == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});
  const std::string once = serialize_config(c);
  const RunConfig again = parse_config_string(once);
  CHECK(again == c);
  CHECK(serialize_config(again) == once);
  // Defaults round-trip too.
  CHECK(parse_config_string(serialize_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("unknown keys and sections name the line") {
  CHECK(contains(error_of("[env]\nid = pointmass\n\n[agent]\nlr = 0.1\nlearning_rate = 3\n"), "line 6"));
  CHECK(contains(error_of("[agent]\nbatch_size = many\n"), "line 2"));
  CHECK(contains(error_of("[agnet]\nlr = 1\n"), "unknown section"));
  CHECK(contains(error_of("[env]\nid = pointmass\ncells = 4\n"), "line 3"));  // oned key on pointmass
  CHECK(contains(error_of("[delays]\nalpha_min = 1\n"), "line 2"));         // uniform key on constant
  CHECK(!error_of("[agent]\nlr = 1\nlr = 2\n").empty());                    // duplicate key
}

TEST_CASE("buffer length must equal the delay maxima") {
  const std::string e = error_of("[delays]\nalpha = 2\nbeta = 3\nbuffer_len = 4\n");
  CHECK(contains(e, "K = 4 violates K >= max_alpha + max_beta = 5"));
  CHECK(!error_of("[delays]\nalpha = 2\nbeta = 3\nbuffer_len = 6\n").empty());
  CHECK(error_of("[delays]\nalpha = 2\nbeta = 3\nbuffer_len = 5\n").empty());
  CHECK(contains(error_of("[delays]\nkind = uniform\nalpha_min = 3\nalpha_max = 1\n"), "alpha_min"));
}

TEST_CASE("overrides apply on top of the file") {
  const RunConfig c =
      parse_config_string("[agent]\nlr = 0.1\n", {"agent.lr=0.5", "run.steps = 42", "delays.alpha=2", "delays.beta=3"});
  CHECK(c.agent.lr == 0.5);
  CHECK(c.steps == 42);
  CHECK(c.delays.total_max_alpha() == 2);
  CHECK(c.delays.total_max_beta() == 3);
  CHECK(contains(error_of("", {"agent.lr=x"}), "override 'agent.lr=x'"));
  CHECK(contains(error_of("", {"lr=1"}), "section.key=value"));
  CHECK(contains(error_of("[agent]\nkind = rtac\n[delays]\nalpha = 1\n"), "rtac"));
}

TEST_CASE("channels and labels follow the delay model") {
  DelayConfig d;
  d.alpha = 2;
  d.beta = 3;
  CHECK(delay_label(d) == "const(2;3)");
  CHECK(make_channel(d).buffer_len() == 5);
  d.kind = DelayModel::uniform;
  d.alpha_min = 0;
  d.alpha_max = 2;
  d.beta_min = 1;
  d.beta_max = 3;
  CHECK(delay_label(d) == "uniform(0-2;1-3)");
  CHECK(make_channel(d).buffer_len() == 5);

  const auto dir = std::filesystem::temp_directory_path() / "rdmdp_cfg_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "h.csv") << "delay_ticks,count\n0,1\n1,3\n2,1\n";
  const RunConfig c = load_config(
      [&] {
        std::ofstream(dir / "run.ini") << "[delays]\nkind = histogram\nfile = h.csv\nmax_alpha = 2\nmax_beta = 2\n";
        return (dir / "run.ini").string();
      }());
  CHECK(delay_label(c.delays) == "histogram(h.csv)");
  CHECK(make_channel(c.delays, c.base_dir).buffer_len() == 4);
  DelayConfig missing = c.delays;
  missing.file = "nope.csv";
  CHECK_THROWS_AS(make_channel(missing, c.base_dir), ConfigError);
}

TEST_CASE("environments are built from the config") {
  RunConfig c = parse_config_string("[env]\nid = chain\nstates = 3\nhorizon = 20\n");
  auto env = make_environment(c.env);
  CHECK(env->horizon() == 20);
  CHECK(env->action_space().kind == ActionKind::continuous);
  CHECK(env_label(c.env) == "chain");
  c = parse_config_string("[env]\nid = oned\nreward = gust\ncells = 8\n");
  CHECK(env_label(c.env) == "oned-gust");
  CHECK(contains(error_of("[env]\nid = oned\nreward = gust\ncells = 6\n"), "cells"));
}

TEST_CASE("gust world: the rewarded move depends on the in-flight action") {
  OneDWorldOptions o;
  o.reward = OneDReward::gust;
  o.num_cells = 8;
  o.one_hot = true;
  o.horizon = 10;
  const OneDWorld env(o);
  CHECK(env.observation_dim() == 9);
  Rng rng(3);
  for (int cell = 0; cell < 8; ++cell) {
    for (int g = 0; g < 2; ++g) {
      const Observation s = env.observe(cell, g);
      CHECK(env.position(s) == cell);
      CHECK(env.gust(s) == g);
      for (int a = 0; a < 2; ++a) {
        const EnvStep st = env.step(s, discrete_action(a), rng);
        const int move = a == 1 ? 1 : -1;
        CHECK(env.position(st.next_observation) == ((cell + move + 2 * g) % 8 + 8) % 8);
        CHECK(st.reward == (move == env.preferred_move(cell) ? 1.0 : 0.0));
      }
    }
    // Both successors of a cell prefer opposite moves, so the next reward is a
    // coin flip without knowing the move in flight.
    CHECK(env.preferred_move((cell + 1) % 8) == -env.preferred_move((cell + 7) % 8));
  }
  int gusts = 0;
  for (int i = 0; i < 1000; ++i) gusts += env.gust(env.step(env.observe(0, 0), discrete_action(1), rng).next_observation);
  CHECK(gusts > 400);
  CHECK(gusts < 600);
}

TEST_CASE("bootstrap interval and welch test") {
  Rng rng(1);
  const Interval same = bootstrap_mean_interval({2.0, 2.0, 2.0}, rng);
  CHECK(same.mean == 2.0);
  CHECK(same.lo == 2.0);
  CHECK(same.hi == 2.0);
  const Interval iv = bootstrap_mean_interval({1.0, 2.0, 3.0, 4.0}, rng);
  CHECK(iv.mean == 2.5);
  CHECK(iv.lo < 2.5);
  CHECK(iv.hi > 2.5);
  CHECK(iv.lo >= 1.0);
  CHECK(iv.hi <= 4.0);
  Rng a(9), b(9);
  CHECK(bootstrap_mean_interval({1, 5, 2}, a).lo == bootstrap_mean_interval({1, 5, 2}, b).lo);

  // Two samples with a hand-computed Welch statistic: means 2 and 5, variances 1 and 4.
  const WelchResult w = welch_t_test({1, 2, 3}, {3, 5, 7});
  CHECK(w.t == doctest::Approx(-3.0 / std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CHECK(w.df == doctest::Approx((25.0 / 9.0) / (1.0 / 18.0 + 16.0 / 18.0)).epsilon(1e-12));
  CHECK(w.p_two_sided > 0.05);
  CHECK(w.p_two_sided < 0.2);
  CHECK(welch_t_test({1, 2, 3}, {1, 2, 3}).p_two_sided == doctest::Approx(1.0));
}

TEST_CASE("bench matrix expands cells and seeds and runs deterministically") {
  RunConfig c = parse_config_string(
      "[env]\nid = chain\nhorizon = 10\n[agent]\nhidden = 8\nbatch_size = 8\nwarmup = 20\n"
      "[run]\nsteps = 60\neval_every = 20\neval_episodes = 1\nseed = 3\n"
      "[bench]\nagents = dcac sac\ndelays = 0:1 1:1\nseeds = 2\nwindow = 2\n");
  const auto jobs = expand_bench_jobs(c);
  REQUIRE(jobs.size() == 8);
  CHECK(jobs[0].config.seed == 3);
  CHECK(jobs[1].config.seed == 4);
  CHECK(jobs[2].agent == "sac");
  CHECK(jobs[4].delay == "const(1;1)");
  std::ostringstream par, ser;
  const auto cells = run_benchmark_suite(c, &par, "", true);
  run_benchmark_suite(c, &ser, "", false);
  CHECK(par.str() == ser.str());
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].seed_means.size() == 2);
  CHECK(par.str().rfind("env,delay,agent,mean,lo90,hi90\nchain,const(0;1),dcac,", 0) == 0);

  c.bench.agents = {"rtac"};
  CHECK_THROWS_AS(run_benchmark_suite(c, nullptr), ConfigError);
}
