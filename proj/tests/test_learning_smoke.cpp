#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rdmdp/agents.hpp"
#include "rdmdp/config.hpp"

using namespace rdmdp;

// Seed 5 starts from a policy that never reaches the paying state, so passing
// requires actual learning.
TEST_CASE("sac and dcac solve the delayed chain") {
  const RunConfig base = load_config(RDMDP_SOURCE_DIR "/configs/chain_smoke.ini");
  const auto env = make_environment(base.env);
  const ChannelConfig channel = make_channel(base.delays);
  Rng rng(0);
  const Policy right{ConstantPolicy{Action{1.0}}, "right"};
  const double optimum = evaluate_episode(*env, channel, right, false, episode_horizon(*env), rng);
  CHECK(optimum == 46.0);
  for (AgentKind kind : {AgentKind::sac, AgentKind::dcac}) {
    AgentConfig agent = base.agent;
    agent.kind = kind;
    const TrainResult r = train(*env, channel, agent, make_train_options(base));
    INFO(agent_kind_name(kind));
    REQUIRE(r.rows.size() == 20);
    CHECK(r.rows.front().eval_return < 0.95 * optimum);
    CHECK(r.rows.back().eval_return >= 0.95 * optimum);
  }
}
