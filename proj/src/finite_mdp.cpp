#include "rdmdp/finite_mdp.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rdmdp/errors.hpp"

namespace rdmdp {

namespace {

constexpr double kRowTolerance = 1e-12;

void check_distribution(const Vector& p, std::size_t n, const std::string& what) {
  if (p.size() != n) throw std::invalid_argument(what + ": wrong length");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(what + ": probability outside [0,1]");
    total += v;
  }
  if (std::abs(total - 1.0) > kRowTolerance)
    throw std::invalid_argument(what + ": sums to " + std::to_string(total));
}

}  // namespace

void FiniteMDP::validate() const {
  if (num_states <= 0 || num_actions <= 0)
    throw std::invalid_argument("FiniteMDP: need at least one state and one action");
  const auto ns = static_cast<std::size_t>(num_states);
  const auto na = static_cast<std::size_t>(num_actions);
  check_distribution(init, ns, "FiniteMDP init");
  if (trans.size() != ns || reward.size() != ns || terminal.size() != ns)
    throw std::invalid_argument("FiniteMDP: tensor shapes disagree with num_states");
  for (std::size_t s = 0; s < ns; ++s) {
    if (trans[s].size() != na || reward[s].size() != na)
      throw std::invalid_argument("FiniteMDP: tensor shapes disagree with num_actions");
    for (std::size_t a = 0; a < na; ++a) {
      check_distribution(trans[s][a], ns,
                         "FiniteMDP row P[" + std::to_string(s) + "][" + std::to_string(a) + "]");
      if (!std::isfinite(reward[s][a])) throw std::invalid_argument("FiniteMDP: non-finite reward");
    }
  }
}

EnvStep finite_mdp_step(const FiniteMDP& mdp, int s, int a, Rng& rng) {
  if (s < 0 || s >= mdp.num_states) throw std::invalid_argument("finite_mdp_step: state out of range");
  if (a < 0 || a >= mdp.num_actions) throw std::invalid_argument("finite_mdp_step: action out of range");
  if (mdp.terminal[static_cast<std::size_t>(s)])
    throw ContractViolation("finite_mdp_step: stepping terminal state " + std::to_string(s));
  const auto& row = mdp.trans[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
  const auto next = static_cast<int>(rng.categorical(row));
  return EnvStep{Observation{static_cast<double>(next)},
                 mdp.reward[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)],
                 mdp.terminal[static_cast<std::size_t>(next)]};
}

FiniteMDP parse_finite_mdp(std::istream& in) {
  FiniteMDP mdp;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  bool have_init = false;
  bool have_terminal = false;
  std::vector<std::vector<bool>> seen;

  auto read_probs = [&](std::istringstream& fields, const char* what) {
    Vector p(static_cast<std::size_t>(mdp.num_states));
    for (double& v : p)
      if (!(fields >> v)) throw ParseError(std::string(what) + ": expected " +
                                               std::to_string(mdp.num_states) + " values", line_no);
    std::string extra;
    if (fields >> extra) throw ParseError(std::string(what) + ": trailing field '" + extra + "'", line_no);
    return p;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    if (!have_header) {
      std::string a, b;
      fields >> a >> b;
      if (a.rfind("states=", 0) != 0 || b.rfind("actions=", 0) != 0)
        throw ParseError("expected header 'states=N actions=M'", line_no);
      try {
        mdp.num_states = std::stoi(a.substr(7));
        mdp.num_actions = std::stoi(b.substr(8));
      } catch (const std::exception&) {
        throw ParseError("bad header counts", line_no);
      }
      if (mdp.num_states <= 0 || mdp.num_actions <= 0) throw ParseError("counts must be positive", line_no);
      const auto ns = static_cast<std::size_t>(mdp.num_states);
      const auto na = static_cast<std::size_t>(mdp.num_actions);
      mdp.trans.assign(ns, std::vector<Vector>(na));
      mdp.reward.assign(ns, Vector(na, 0.0));
      mdp.terminal.assign(ns, false);
      seen.assign(ns, std::vector<bool>(na, false));
      have_header = true;
      continue;
    }
    std::string head;
    fields >> head;
    if (head == "init") {
      mdp.init = read_probs(fields, "init");
      have_init = true;
    } else if (head == "terminal") {
      for (std::size_t s = 0; s < mdp.terminal.size(); ++s) {
        int b = -1;
        if (!(fields >> b) || (b != 0 && b != 1)) throw ParseError("terminal: expected 0/1 flags", line_no);
        mdp.terminal[s] = b == 1;
      }
      have_terminal = true;
    } else {
      int s = -1, a = -1;
      double r = 0.0;
      try {
        std::size_t used = 0;
        s = std::stoi(head, &used);
        if (used != head.size()) throw std::invalid_argument(head);
      } catch (const std::exception&) {
        throw ParseError("unrecognized line '" + head + "'", line_no);
      }
      if (!(fields >> a >> r)) throw ParseError("expected 's a r p0 ...'", line_no);
      if (s < 0 || s >= mdp.num_states || a < 0 || a >= mdp.num_actions)
        throw ParseError("state/action index out of range", line_no);
      if (seen[s][a]) throw ParseError("duplicate row for (s, a)", line_no);
      seen[s][a] = true;
      mdp.reward[s][a] = r;
      mdp.trans[s][a] = read_probs(fields, "transition row");
    }
  }
  if (!have_header) throw ParseError("empty MDP file", 0);
  for (std::size_t s = 0; s < seen.size(); ++s)
    for (std::size_t a = 0; a < seen[s].size(); ++a)
      if (!seen[s][a])
        throw ParseError("missing row for s=" + std::to_string(s) + " a=" + std::to_string(a), line_no);
  if (!have_init) throw ParseError("missing 'init' line", line_no);
  if (!have_terminal) throw ParseError("missing 'terminal' line", line_no);
  try {
    mdp.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  return mdp;
}

FiniteMDP load_finite_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return parse_finite_mdp(in);
}

void write_finite_mdp(std::ostream& out, const FiniteMDP& mdp) {
  out << std::setprecision(17);
  out << "states=" << mdp.num_states << " actions=" << mdp.num_actions << '\n';
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a) {
      out << s << ' ' << a << ' ' << mdp.reward[s][a];
      for (double p : mdp.trans[s][a]) out << ' ' << p;
      out << '\n';
    }
  out << "init";
  for (double p : mdp.init) out << ' ' << p;
  out << "\nterminal";
  for (bool t : mdp.terminal) out << ' ' << (t ? 1 : 0);
  out << '\n';
}

FiniteMDP chain_mdp(int num_states, double goal_reward) {
  if (num_states < 2) throw std::invalid_argument("chain_mdp: need at least two states");
  FiniteMDP mdp;
  mdp.num_states = num_states;
  mdp.num_actions = 2;
  const auto ns = static_cast<std::size_t>(num_states);
  mdp.init.assign(ns, 0.0);
  mdp.init[0] = 1.0;
  mdp.trans.assign(ns, std::vector<Vector>(2, Vector(ns, 0.0)));
  mdp.reward.assign(ns, Vector(2, 0.0));
  mdp.terminal.assign(ns, false);
  for (int s = 0; s < num_states; ++s) {
    const int left = s > 0 ? s - 1 : 0;
    const int right = s + 1 < num_states ? s + 1 : s;
    mdp.trans[s][0][left] = 1.0;
    mdp.trans[s][1][right] = 1.0;
  }
  mdp.reward[ns - 1][0] = goal_reward;
  mdp.reward[ns - 1][1] = goal_reward;
  mdp.validate();
  return mdp;
}

FiniteMDP random_finite_mdp(int num_states, int num_actions, Rng& rng) {
  FiniteMDP mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  const auto ns = static_cast<std::size_t>(num_states);
  const auto na = static_cast<std::size_t>(num_actions);
  auto random_row = [&]() {
    Vector p(ns);
    double total = 0.0;
    for (double& v : p) {
      v = 0.2 + rng.uniform();
      total += v;
    }
    for (double& v : p) v /= total;
    // Push the rounding residue into the largest entry so the row sums to 1.
    double sum = 0.0;
    std::size_t big = 0;
    for (std::size_t i = 0; i < ns; ++i) {
      sum += p[i];
      if (p[i] > p[big]) big = i;
    }
    p[big] += 1.0 - sum;
    return p;
  };
  mdp.init = random_row();
  mdp.trans.assign(ns, std::vector<Vector>(na));
  mdp.reward.assign(ns, Vector(na));
  mdp.terminal.assign(ns, false);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t a = 0; a < na; ++a) {
      mdp.trans[s][a] = random_row();
      mdp.reward[s][a] = rng.uniform();
    }
  mdp.validate();
  return mdp;
}

TabularEnv::TabularEnv(FiniteMDP mdp, std::size_t horizon) : mdp_(std::move(mdp)), horizon_(horizon) {
  mdp_.validate();
}

ActionSpace TabularEnv::action_space() const {
  return ActionSpace{ActionKind::discrete, static_cast<std::size_t>(mdp_.num_actions)};
}

Observation TabularEnv::reset(Rng& rng) const {
  return Observation{static_cast<double>(rng.categorical(mdp_.init))};
}

EnvStep TabularEnv::step(const Observation& s, const Action& a, Rng& rng) const {
  return finite_mdp_step(mdp_, observation_index(s), action_index(a), rng);
}

}  // namespace rdmdp
