#include "rdmdp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "rdmdp/csv.hpp"
#include "rdmdp/delay_process.hpp"
#include "rdmdp/errors.hpp"
#include "rdmdp/finite_mdp.hpp"

namespace rdmdp {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Drops everything from the first '#' or ';' on each line; line numbers stay put.
std::string strip_comments(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    out += line.substr(0, line.find_first_of("#;"));
    out += '\n';
  }
  return out;
}

// Where a key came from, for error messages.
class Origins {
 public:
  explicit Origins(const std::string& text) {
    std::istringstream in(text);
    std::string line, section;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq != std::string::npos) lines_.emplace(section + "." + trim(t.substr(0, eq)), no);
    }
  }
  void set_override(const std::string& path, const std::string& text) { overrides_[path] = text; }
  std::string where(const std::string& path) const {
    if (auto it = overrides_.find(path); it != overrides_.end()) return "override '" + it->second + "'";
    if (auto it = lines_.find(path); it != lines_.end()) return "line " + std::to_string(it->second);
    return "'" + path + "'";
  }

 private:
  std::map<std::string, int> lines_;
  std::map<std::string, std::string> overrides_;
};

class Reader {
 public:
  Reader(const Origins& origins, std::string section) : origins_(origins), section_(std::move(section)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(origins_.where(section_ + "." + key) + ": " + section_ + "." + key + ": " + what);
  }

  template <class T>
  T number(const std::string& key, const std::string& v) const {
    T out{};
    const char* end = v.data() + v.size();
    auto res = std::from_chars(v.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) fail(key, "expected a number, got '" + v + "'");
    return out;
  }

  bool boolean(const std::string& key, const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, "expected true or false, got '" + v + "'");
  }

  template <class T>
  T at_least(const std::string& key, const std::string& v, T lo) const {
    const T x = number<T>(key, v);
    if (x < lo) fail(key, "must be >= " + std::to_string(lo));
    return x;
  }

 private:
  const Origins& origins_;
  std::string section_;
};

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string env_id_name(EnvId id) {
  switch (id) {
    case EnvId::pointmass: return "pointmass";
    case EnvId::oned: return "oned";
    case EnvId::chain: return "chain";
  }
  return "pointmass";
}

std::string delay_model_name(DelayModel m) {
  switch (m) {
    case DelayModel::constant: return "constant";
    case DelayModel::uniform: return "uniform";
    case DelayModel::histogram: return "histogram";
  }
  return "constant";
}

const pt::ptree* section_of(const pt::ptree& tree, const std::string& name) {
  auto it = tree.find(name);
  return it == tree.not_found() ? nullptr : &it->second;
}

void read_env(const pt::ptree* sec, const Origins& origins, EnvConfig& env) {
  if (sec == nullptr) return;
  Reader r(origins, "env");
  if (auto id = sec->get_optional<std::string>("id")) {
    if (*id == "pointmass") env.id = EnvId::pointmass;
    else if (*id == "oned") env.id = EnvId::oned;
    else if (*id == "chain") env.id = EnvId::chain;
    else r.fail("id", "unknown environment '" + *id + "' (pointmass|oned|chain)");
  }
  for (const auto& [key, node] : *sec) {
    const std::string v = node.data();
    const bool pm = env.id == EnvId::pointmass, od = env.id == EnvId::oned, ch = env.id == EnvId::chain;
    auto only = [&](bool applies) {
      if (!applies) r.fail(key, "does not apply to env " + env_id_name(env.id));
    };
    if (key == "id") continue;
    if (key == "horizon") {
      const auto h = r.at_least<std::size_t>(key, v, 1);
      if (pm) env.pointmass.horizon = h;
      else if (od) env.oned.horizon = h;
      else env.chain_horizon = h;
    } else if (key == "cells") {
      only(od);
      env.oned.num_cells = r.at_least<int>(key, v, 2);
    } else if (key == "reward") {
      only(od);
      try {
        env.oned.reward = parse_oned_reward(v);
      } catch (const std::invalid_argument& e) {
        r.fail(key, e.what());
      }
    } else if (key == "start") {
      only(od);
      env.oned.start = r.at_least<int>(key, v, -1);
    } else if (key == "slip") {
      only(od);
      env.oned.slip = r.number<double>(key, v);
      if (!(env.oned.slip >= 0.0 && env.oned.slip <= 1.0)) r.fail(key, "must lie in [0, 1]");
    } else if (key == "continuous") {
      only(od);
      env.oned.continuous = r.boolean(key, v);
    } else if (key == "one_hot") {
      only(od);
      env.oned.one_hot = r.boolean(key, v);
    } else if (key == "dt" || key == "accel" || key == "goal" || key == "wall" || key == "max_speed" ||
               key == "noise") {
      only(pm);
      const double x = r.number<double>(key, v);
      if (key == "dt") env.pointmass.dt = x;
      else if (key == "accel") env.pointmass.accel = x;
      else if (key == "goal") env.pointmass.goal = x;
      else if (key == "wall") env.pointmass.wall = x;
      else if (key == "max_speed") env.pointmass.max_speed = x;
      else env.pointmass.noise = x;
    } else if (key == "states") {
      only(ch);
      env.chain_states = r.at_least<int>(key, v, 2);
    } else {
      r.fail(key, "unknown key");
    }
  }
  if (env.id == EnvId::pointmass) {
    const PointMassOptions& p = env.pointmass;
    if (!(p.dt > 0.0) || !(p.wall > 0.0) || !(p.max_speed > 0.0) || p.noise < 0.0)
      throw ConfigError("env: dt, wall and max_speed must be positive and noise >= 0");
  }
  if (env.id == EnvId::oned) {
    try {
      OneDWorld check(env.oned);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("env: ") + e.what());
    }
  }
}

void read_delays(const pt::ptree* sec, const Origins& origins, DelayConfig& d) {
  Reader r(origins, "delays");
  if (sec != nullptr) {
    if (auto kind = sec->get_optional<std::string>("kind")) {
      if (*kind == "constant") d.kind = DelayModel::constant;
      else if (*kind == "uniform") d.kind = DelayModel::uniform;
      else if (*kind == "histogram") d.kind = DelayModel::histogram;
      else r.fail("kind", "unknown delay model '" + *kind + "' (constant|uniform|histogram)");
    }
    for (const auto& [key, node] : *sec) {
      const std::string v = node.data();
      auto only = [&](DelayModel m) {
        if (d.kind != m) r.fail(key, "does not apply to delays.kind = " + delay_model_name(d.kind));
      };
      if (key == "kind") continue;
      if (key == "alpha") { only(DelayModel::constant); d.alpha = r.at_least<int>(key, v, 0); }
      else if (key == "beta") { only(DelayModel::constant); d.beta = r.at_least<int>(key, v, 1); }
      else if (key == "alpha_min") { only(DelayModel::uniform); d.alpha_min = r.at_least<int>(key, v, 0); }
      else if (key == "alpha_max") { only(DelayModel::uniform); d.alpha_max = r.at_least<int>(key, v, 0); }
      else if (key == "beta_min") { only(DelayModel::uniform); d.beta_min = r.at_least<int>(key, v, 1); }
      else if (key == "beta_max") { only(DelayModel::uniform); d.beta_max = r.at_least<int>(key, v, 1); }
      else if (key == "file") { only(DelayModel::histogram); d.file = v; }
      else if (key == "action_file") { only(DelayModel::histogram); d.action_file = v; }
      else if (key == "max_alpha") { only(DelayModel::histogram); d.max_alpha = r.at_least<int>(key, v, 0); }
      else if (key == "max_beta") { only(DelayModel::histogram); d.max_beta = r.at_least<int>(key, v, 1); }
      else if (key == "buffer_len") { d.buffer_len = r.at_least<int>(key, v, 0); }
      else r.fail(key, "unknown key");
    }
  }
  if (d.kind == DelayModel::uniform) {
    if (d.alpha_min > d.alpha_max) r.fail("alpha_min", "must not exceed alpha_max");
    if (d.beta_min > d.beta_max) r.fail("beta_min", "must not exceed beta_max");
  }
  if (d.kind == DelayModel::histogram && d.file.empty())
    throw ConfigError("delays.kind = histogram needs delays.file");
  const int sum = d.total_max_alpha() + d.total_max_beta();
  if (d.buffer_len != 0 && d.buffer_len < sum)
    r.fail("buffer_len", "K = " + std::to_string(d.buffer_len) + " violates K >= max_alpha + max_beta = " +
                             std::to_string(sum));
  if (d.buffer_len > sum)
    r.fail("buffer_len", "K = " + std::to_string(d.buffer_len) +
                             " is larger than max_alpha + max_beta = " + std::to_string(sum) +
                             "; the buffer length is fixed to that sum");
}

void read_agent(const pt::ptree* sec, const Origins& origins, AgentConfig& a) {
  if (sec == nullptr) return;
  Reader r(origins, "agent");
  for (const auto& [key, node] : *sec) {
    const std::string v = node.data();
    if (key == "kind") {
      try {
        a.kind = parse_agent_kind(v);
      } catch (const std::invalid_argument& e) {
        r.fail(key, e.what());
      }
    } else if (key == "lr") a.lr = r.number<double>(key, v);
    else if (key == "gamma") a.gamma = r.number<double>(key, v);
    else if (key == "batch_size") a.batch_size = r.at_least<int>(key, v, 1);
    else if (key == "tau") a.tau = r.number<double>(key, v);
    else if (key == "reward_scale") a.reward_scale = r.number<double>(key, v);
    else if (key == "entropy_scale") a.entropy_scale = r.number<double>(key, v);
    else if (key == "memory_size") a.memory_size = r.at_least<std::size_t>(key, v, 2);
    else if (key == "warmup") a.warmup = r.at_least<long>(key, v, 0);
    else if (key == "updates_per_step") a.updates_per_step = r.at_least<int>(key, v, 0);
    else if (key == "num_critics") a.num_critics = r.number<int>(key, v);
    else if (key == "hidden") a.hidden = r.at_least<int>(key, v, 1);
    else if (key == "layers") a.layers = r.at_least<int>(key, v, 0);
    else if (key == "activation") {
      try {
        a.activation = nn::parse_activation(v);
      } catch (const std::invalid_argument& e) {
        r.fail(key, e.what());
      }
    } else if (key == "max_n") a.max_n = r.at_least<std::size_t>(key, v, 0);
    else if (key == "use_kappa") a.use_kappa = r.boolean(key, v);
    else r.fail(key, "unknown key");
  }
  try {
    a.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("[agent] ") + e.what());
  }
}

void read_run(const pt::ptree* sec, const Origins& origins, RunConfig& c) {
  if (sec == nullptr) return;
  Reader r(origins, "run");
  for (const auto& [key, node] : *sec) {
    const std::string v = node.data();
    if (key == "seed") c.seed = r.number<std::uint64_t>(key, v);
    else if (key == "steps") c.steps = r.at_least<long>(key, v, 0);
    else if (key == "eval_every") c.eval_every = r.at_least<long>(key, v, 1);
    else if (key == "eval_episodes") c.eval_episodes = r.at_least<int>(key, v, 1);
    else if (key == "eval") {
      if (v == "mean") c.eval_stochastic = false;
      else if (v == "sample") c.eval_stochastic = true;
      else r.fail(key, "expected mean or sample, got '" + v + "'");
    } else if (key == "out") c.out = v;
    else r.fail(key, "unknown key");
  }
}

void read_bench(const pt::ptree* sec, const Origins& origins, BenchConfig& b) {
  if (sec == nullptr) return;
  Reader r(origins, "bench");
  for (const auto& [key, node] : *sec) {
    const std::string v = node.data();
    if (key == "agents") {
      b.agents = split_words(v);
      if (b.agents.empty()) r.fail(key, "needs at least one agent");
      for (const std::string& a : b.agents) {
        try {
          parse_agent_kind(a);
        } catch (const std::invalid_argument& e) {
          r.fail(key, e.what());
        }
      }
    } else if (key == "delays") {
      b.delays.clear();
      for (const std::string& w : split_words(v)) {
        const auto colon = w.find(':');
        if (colon == std::string::npos) r.fail(key, "expected alpha:beta pairs, got '" + w + "'");
        const int al = r.at_least<int>(key, w.substr(0, colon), 0);
        const int be = r.at_least<int>(key, w.substr(colon + 1), 1);
        b.delays.emplace_back(al, be);
      }
    } else if (key == "seeds") b.seeds = r.at_least<int>(key, v, 1);
    else if (key == "window") b.window = r.at_least<int>(key, v, 1);
    else r.fail(key, "unknown key");
  }
}

template <class T>
void put(std::ostringstream& out, const std::string& key, const T& v) {
  out << key << " = " << v << '\n';
}
void put_double(std::ostringstream& out, const std::string& key, double v) { put(out, key, format_double(v)); }
void put_bool(std::ostringstream& out, const std::string& key, bool v) { put(out, key, v ? "true" : "false"); }

}  // namespace

int DelayConfig::total_max_alpha() const {
  switch (kind) {
    case DelayModel::constant: return alpha;
    case DelayModel::uniform: return alpha_max;
    case DelayModel::histogram: return max_alpha;
  }
  return alpha;
}

int DelayConfig::total_max_beta() const {
  switch (kind) {
    case DelayModel::constant: return beta;
    case DelayModel::uniform: return beta_max;
    case DelayModel::histogram: return max_beta;
  }
  return beta;
}

RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides, const std::string& base_dir) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = strip_comments(buffer.str());
  Origins origins(text);

  pt::ptree tree;
  try {
    std::istringstream s(text);
    pt::read_ini(s, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    const std::string path = trim(o.substr(0, eq == std::string::npos ? o.size() : eq));
    const auto dot = path.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot == 0 || dot + 1 == path.size() ||
        path.find('.', dot + 1) != std::string::npos)
      throw ConfigError("override '" + o + "': expected section.key=value");
    tree.put(path, trim(o.substr(eq + 1)));
    origins.set_override(path, o);
  }

  static const std::vector<std::string> kSections{"env", "delays", "agent", "run", "bench"};
  for (const auto& [name, node] : tree) {
    if (node.empty()) throw ConfigError(origins.where("." + name) + ": key '" + name + "' outside any section");
    if (std::find(kSections.begin(), kSections.end(), name) == kSections.end())
      throw ConfigError("unknown section [" + name + "] (env|delays|agent|run|bench)");
  }

  RunConfig c;
  c.base_dir = base_dir;
  read_env(section_of(tree, "env"), origins, c.env);
  read_delays(section_of(tree, "delays"), origins, c.delays);
  read_agent(section_of(tree, "agent"), origins, c.agent);
  read_run(section_of(tree, "run"), origins, c);
  read_bench(section_of(tree, "bench"), origins, c.bench);
  if (c.agent.kind == AgentKind::rtac &&
      !(c.delays.kind == DelayModel::constant && c.delays.alpha == 0 && c.delays.beta == 1))
    throw ConfigError("agent.kind = rtac needs delays.kind = constant with alpha = 0, beta = 1");
  return c;
}

RunConfig parse_config_string(const std::string& text, const std::vector<std::string>& overrides) {
  std::istringstream in(text);
  return parse_config(in, overrides);
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in, overrides, std::filesystem::path(path).parent_path().string());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "[env]\n";
  put(out, "id", env_id_name(c.env.id));
  switch (c.env.id) {
    case EnvId::pointmass: {
      const PointMassOptions& p = c.env.pointmass;
      put(out, "horizon", p.horizon);
      put_double(out, "dt", p.dt);
      put_double(out, "accel", p.accel);
      put_double(out, "goal", p.goal);
      put_double(out, "wall", p.wall);
      put_double(out, "max_speed", p.max_speed);
      put_double(out, "noise", p.noise);
      break;
    }
    case EnvId::oned: {
      const OneDWorldOptions& o = c.env.oned;
      put(out, "horizon", o.horizon);
      put(out, "cells", o.num_cells);
      put(out, "reward", oned_reward_name(o.reward));
      put(out, "start", o.start);
      put_double(out, "slip", o.slip);
      put_bool(out, "continuous", o.continuous);
      put_bool(out, "one_hot", o.one_hot);
      break;
    }
    case EnvId::chain:
      put(out, "horizon", c.env.chain_horizon);
      put(out, "states", c.env.chain_states);
      break;
  }

  const DelayConfig& d = c.delays;
  out << "\n[delays]\n";
  put(out, "kind", delay_model_name(d.kind));
  switch (d.kind) {
    case DelayModel::constant:
      put(out, "alpha", d.alpha);
      put(out, "beta", d.beta);
      break;
    case DelayModel::uniform:
      put(out, "alpha_min", d.alpha_min);
      put(out, "alpha_max", d.alpha_max);
      put(out, "beta_min", d.beta_min);
      put(out, "beta_max", d.beta_max);
      break;
    case DelayModel::histogram:
      put(out, "file", d.file);
      if (!d.action_file.empty()) put(out, "action_file", d.action_file);
      put(out, "max_alpha", d.max_alpha);
      put(out, "max_beta", d.max_beta);
      break;
  }
  if (d.buffer_len != 0) put(out, "buffer_len", d.buffer_len);

  const AgentConfig& a = c.agent;
  out << "\n[agent]\n";
  put(out, "kind", agent_kind_name(a.kind));
  put_double(out, "lr", a.lr);
  put_double(out, "gamma", a.gamma);
  put(out, "batch_size", a.batch_size);
  put_double(out, "tau", a.tau);
  put_double(out, "reward_scale", a.reward_scale);
  put_double(out, "entropy_scale", a.entropy_scale);
  put(out, "memory_size", a.memory_size);
  put(out, "warmup", a.warmup);
  put(out, "updates_per_step", a.updates_per_step);
  put(out, "num_critics", a.num_critics);
  put(out, "hidden", a.hidden);
  put(out, "layers", a.layers);
  put(out, "activation", nn::activation_name(a.activation));
  put(out, "max_n", a.max_n);
  put_bool(out, "use_kappa", a.use_kappa);

  out << "\n[run]\n";
  put(out, "seed", c.seed);
  put(out, "steps", c.steps);
  put(out, "eval_every", c.eval_every);
  put(out, "eval_episodes", c.eval_episodes);
  put(out, "eval", c.eval_stochastic ? "sample" : "mean");
  if (!c.out.empty()) put(out, "out", c.out);

  out << "\n[bench]\n";
  std::string agents;
  for (const std::string& s : c.bench.agents) agents += (agents.empty() ? "" : " ") + s;
  put(out, "agents", agents);
  if (!c.bench.delays.empty()) {
    std::string cells;
    for (const auto& [al, be] : c.bench.delays)
      cells += (cells.empty() ? "" : " ") + std::to_string(al) + ":" + std::to_string(be);
    put(out, "delays", cells);
  }
  put(out, "seeds", c.bench.seeds);
  put(out, "window", c.bench.window);
  return out.str();
}

std::shared_ptr<const Environment> make_environment(const EnvConfig& env) {
  switch (env.id) {
    case EnvId::pointmass: return std::make_shared<PointMass>(env.pointmass);
    case EnvId::oned: return std::make_shared<OneDWorld>(env.oned);
    case EnvId::chain:
      return std::make_shared<BinaryActionEnv>(
          std::make_shared<TabularEnv>(chain_mdp(env.chain_states), env.chain_horizon));
  }
  throw ConfigError("unknown environment");
}

ChannelConfig make_channel(const DelayConfig& d, const std::string& base_dir) {
  try {
    switch (d.kind) {
      case DelayModel::constant: return ChannelConfig::constant(d.alpha, d.beta);
      case DelayModel::uniform:
        return ChannelConfig::from_processes(DelayProcess::uniform(d.alpha_min, d.alpha_max, 0),
                                             DelayProcess::uniform(d.beta_min, d.beta_max, 1));
      case DelayModel::histogram: {
        auto resolve = [&](const std::string& p) {
          const std::filesystem::path path(p);
          return path.is_absolute() || base_dir.empty() ? path.string() : (std::filesystem::path(base_dir) / path).string();
        };
        const std::string obs_file = resolve(d.file);
        const std::string act_file = resolve(d.action_file.empty() ? d.file : d.action_file);
        return ChannelConfig::from_processes(load_delay_histogram(obs_file, d.max_alpha, 0),
                                             load_delay_histogram(act_file, d.max_beta, 1));
      }
    }
  } catch (const ParseError& e) {
    throw ConfigError(std::string("delay histogram: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("delays: ") + e.what());
  }
  throw ConfigError("unknown delay model");
}

TrainOptions make_train_options(const RunConfig& c) {
  TrainOptions o;
  o.steps = c.steps;
  o.seed = c.seed;
  o.eval_every = c.eval_every;
  o.eval_episodes = c.eval_episodes;
  o.eval_stochastic = c.eval_stochastic;
  return o;
}

std::string delay_label(const DelayConfig& d) {
  switch (d.kind) {
    case DelayModel::constant: return "const(" + std::to_string(d.alpha) + ";" + std::to_string(d.beta) + ")";
    case DelayModel::uniform:
      return "uniform(" + std::to_string(d.alpha_min) + "-" + std::to_string(d.alpha_max) + ";" +
             std::to_string(d.beta_min) + "-" + std::to_string(d.beta_max) + ")";
    case DelayModel::histogram: return "histogram(" + std::filesystem::path(d.file).filename().string() + ")";
  }
  return "";
}

std::string env_label(const EnvConfig& env) {
  if (env.id == EnvId::oned) return "oned-" + oned_reward_name(env.oned.reward);
  return env_id_name(env.id);
}

}  // namespace rdmdp
