#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "rdmdp/agents.hpp"
#include "rdmdp/channel.hpp"
#include "rdmdp/envs.hpp"

namespace rdmdp {

enum class EnvId { pointmass, oned, chain };

struct EnvConfig {
  EnvId id = EnvId::pointmass;
  OneDWorldOptions oned;
  PointMassOptions pointmass;
  int chain_states = 2;
  std::size_t chain_horizon = 50;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

enum class DelayModel { constant, uniform, histogram };

struct DelayConfig {
  DelayModel kind = DelayModel::constant;
  int alpha = 0, beta = 1;                                    // constant
  int alpha_min = 0, alpha_max = 0, beta_min = 1, beta_max = 1;  // uniform
  std::string file;                                           // histogram (both directions)
  std::string action_file;                                    // optional separate action histogram
  int max_alpha = 0, max_beta = 1;                            // histogram clipping
  int buffer_len = 0;                                         // K; 0 = max_alpha + max_beta

  int total_max_alpha() const;
  int total_max_beta() const;
  friend bool operator==(const DelayConfig&, const DelayConfig&) = default;
};

struct BenchConfig {
  std::vector<std::string> agents{"dcac", "sac"};
  /// Constant (alpha, beta) cells; empty = the single [delays] model.
  std::vector<std::pair<int, int>> delays;
  int seeds = 3;
  int window = 10;  // final evaluations averaged per seed

  friend bool operator==(const BenchConfig&, const BenchConfig&) = default;
};

struct RunConfig {
  EnvConfig env;
  DelayConfig delays;
  AgentConfig agent;
  BenchConfig bench;
  std::uint64_t seed = 0;
  long steps = 100000;
  long eval_every = 1000;
  int eval_episodes = 5;
  bool eval_stochastic = false;
  std::string out;
  /// Directory relative paths are resolved against (not serialized).
  std::string base_dir;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.env == b.env && a.delays == b.delays && a.agent == b.agent && a.bench == b.bench && a.seed == b.seed &&
           a.steps == b.steps && a.eval_every == b.eval_every && a.eval_episodes == b.eval_episodes &&
           a.eval_stochastic == b.eval_stochastic && a.out == b.out;
  }
};

/// Sections [env] [delays] [agent] [run] [bench] of `key = value` lines; '#'
/// and ';' start comments. Overrides are `section.key=value` and are applied on
/// top of the file. Unknown sections or keys, keys that do not apply to the
/// selected env or delay model, bad values and inconsistent delay maxima throw
/// ConfigError naming the line (or the override).
RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {},
                       const std::string& base_dir = "");
RunConfig parse_config_string(const std::string& text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical text: fixed section and key order, only the keys that apply.
std::string serialize_config(const RunConfig& config);

std::shared_ptr<const Environment> make_environment(const EnvConfig& env);
/// Throws ConfigError when a histogram file cannot be read.
ChannelConfig make_channel(const DelayConfig& delays, const std::string& base_dir = "");
TrainOptions make_train_options(const RunConfig& config);
/// Short label such as "const(2,3)".
std::string delay_label(const DelayConfig& delays);
std::string env_label(const EnvConfig& env);

}  // namespace rdmdp
