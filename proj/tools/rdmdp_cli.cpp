#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "rdmdp/bench.hpp"
#include "rdmdp/channel.hpp"
#include "rdmdp/checks.hpp"
#include "rdmdp/config.hpp"
#include "rdmdp/csv.hpp"
#include "rdmdp/errors.hpp"
#include "rdmdp/fixtures.hpp"
#include "rdmdp/oracle.hpp"

using namespace rdmdp;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfigError = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "run config (ini)");
  cmd->add_option("--seed", f.seed, "seed (overrides run.seed)");
  cmd->add_option("--steps", f.steps, "step budget (overrides run.steps)");
  cmd->add_option("--out", f.out, "output file (default: run.out, then stdout)");
  cmd->add_option("--override", f.overrides, "section.key=value, repeatable");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? parse_config_string("", f.overrides) : load_config(f.config, f.overrides);
  if (f.seed) c.seed = *f.seed;
  if (f.steps) {
    if (*f.steps < 0) throw ConfigError("--steps must be >= 0");
    c.steps = *f.steps;
  }
  if (!f.out.empty()) c.out = f.out;
  return c;
}

// Writes to run.out when set, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw ConfigError("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void naive_banner() {
  std::cerr << "WARNING: sac-naive ignores the action buffer and the delays. Its input is not Markov\n"
               "WARNING: under delays and it is expected to score close to a random policy.\n";
}

int cmd_train(const RunConfig& c) {
  if (c.agent.kind == AgentKind::sac_naive) naive_banner();
  const auto env = make_environment(c.env);
  const ChannelConfig channel = make_channel(c.delays, c.base_dir);
  Output out(c.out);
  const TrainResult r = train(*env, channel, c.agent, make_train_options(c), &out.stream());
  if (!r.rows.empty())
    std::cerr << "final eval_return " << format_double(r.rows.back().eval_return) << " after " << r.rows.back().step
              << " steps\n";
  return kOk;
}

int cmd_oracle_check(const RunConfig& c) {
  Output out(c.out);
  bool ok = true;
  out.stream() << "fixture,max_abs_error,pass\n";
  for (const oracle::FixtureResult& r : oracle::resampling_certificate(c.seed)) {
    out.stream() << r.name << ',' << format_double(r.max_abs_error) << ',' << (r.pass ? "pass" : "fail") << '\n';
    ok = ok && r.pass;
  }
  return ok ? kOk : kFailed;
}

int cmd_bias_check(const RunConfig& c) {
  const std::vector<BiasRow> rows = bias_ratio_rows(c.agent.gamma, {1, 2, 3, 5}, c.seed);
  Output out(c.out);
  write_bias_rows(out.stream(), rows);
  for (const BiasRow& r : rows)
    if (!(std::abs(r.measured - r.expected) <= 1e-10)) return kFailed;
  return kOk;
}

int cmd_resample_demo(const RunConfig& c) {
  Output out(c.out);
  write_resample_demo(out.stream(), c.seed);
  return kOk;
}

int cmd_gradient_check(const RunConfig& c) {
  Output out(c.out);
  bool ok = true;
  out.stream() << "agent,critic_rel_error,actor_rel_error,pass\n";
  for (const GradientReport& r : gradient_check(c.seed)) {
    const bool pass = r.critic_rel_error < 1e-3 && r.actor_rel_error < 1e-3;
    out.stream() << r.agent << ',' << format_double(r.critic_rel_error) << ',' << format_double(r.actor_rel_error)
                 << ',' << (pass ? "pass" : "fail") << '\n';
    ok = ok && pass;
  }
  return ok ? kOk : kFailed;
}

int cmd_bench(const RunConfig& c, const std::string& metrics_dir) {
  for (const std::string& a : c.bench.agents)
    if (a == "sac-naive") naive_banner();
  Output out(c.out);
  run_benchmark_suite(c, &out.stream(), metrics_dir);
  return kOk;
}

int cmd_simulate(const RunConfig& c) {
  const auto env = make_environment(c.env);
  const ChannelConfig channel = make_channel(c.delays, c.base_dir);
  const Policy uniform{UniformPolicy{env->action_space()}, "uniform"};
  Rng rng(c.seed);
  const long ticks = static_cast<long>(env->horizon() > 0 ? env->horizon() : 1000);
  Output out(c.out);
  write_episode_log(out.stream(), channel_simulate(*env, uniform, channel, ticks, rng));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomly delayed MDP toolkit: training, benchmarks and exact checks"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string metrics_dir;

  CLI::App* train_cmd = app.add_subcommand("train", "train one agent, metrics CSV to --out");
  CLI::App* oracle_cmd = app.add_subcommand("oracle-check", "resampling certificate over the fixture matrix");
  CLI::App* bias_cmd = app.add_subcommand("bias-check", "n-step bias ratio against gamma^n");
  CLI::App* demo_cmd = app.add_subcommand("resample-demo", "before/after table of the K = 3 walkthrough");
  CLI::App* grad_cmd = app.add_subcommand("gradient-check", "tape gradients against finite differences");
  CLI::App* bench_cmd = app.add_subcommand("bench", "run the [bench] matrix, summary CSV to --out");
  CLI::App* sim_cmd = app.add_subcommand("simulate", "one uniform-policy episode through the channel");
  for (CLI::App* cmd : {train_cmd, oracle_cmd, bias_cmd, demo_cmd, grad_cmd, bench_cmd, sim_cmd})
    add_common(cmd, flags);
  bench_cmd->add_option("--metrics-dir", metrics_dir, "write per-run metrics CSVs here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const RunConfig c = resolve(flags);
    if (train_cmd->parsed()) return cmd_train(c);
    if (oracle_cmd->parsed()) return cmd_oracle_check(c);
    if (bias_cmd->parsed()) return cmd_bias_check(c);
    if (demo_cmd->parsed()) return cmd_resample_demo(c);
    if (grad_cmd->parsed()) return cmd_gradient_check(c);
    if (bench_cmd->parsed()) return cmd_bench(c, metrics_dir);
    if (sim_cmd->parsed()) return cmd_simulate(c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kConfigError;
}
