#include "rdmdp/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdmdp {

OneDReward parse_oned_reward(const std::string& name) {
  if (name == "goal") return OneDReward::goal;
  if (name == "delta") return OneDReward::delta;
  if (name == "pattern") return OneDReward::pattern;
  if (name == "gust") return OneDReward::gust;
  throw std::invalid_argument("unknown oned reward '" + name + "' (goal|delta|pattern|gust)");
}

std::string oned_reward_name(OneDReward r) {
  switch (r) {
    case OneDReward::goal: return "goal";
    case OneDReward::delta: return "delta";
    case OneDReward::pattern: return "pattern";
    case OneDReward::gust: return "gust";
  }
  return "goal";
}

OneDWorld::OneDWorld(OneDWorldOptions opts) : opts_(opts) {
  if (opts_.num_cells < 2) throw std::invalid_argument("OneDWorld: need at least two cells");
  if (ring() && opts_.num_cells % 4 != 0)
    throw std::invalid_argument("OneDWorld: pattern and gust modes need num_cells divisible by 4");
  if (opts_.start >= opts_.num_cells || opts_.start < -1) throw std::invalid_argument("OneDWorld: start outside the world");
  if (!(opts_.slip >= 0.0 && opts_.slip <= 1.0)) throw std::invalid_argument("OneDWorld: slip outside [0, 1]");
}

ActionSpace OneDWorld::action_space() const {
  return opts_.continuous ? ActionSpace{ActionKind::continuous, 1} : ActionSpace{ActionKind::discrete, 2};
}

std::size_t OneDWorld::observation_dim() const {
  const std::size_t cells = opts_.one_hot ? static_cast<std::size_t>(opts_.num_cells) : 1;
  return opts_.reward == OneDReward::gust ? cells + 1 : cells;
}

int OneDWorld::position(const Observation& s) const {
  if (s.size() != observation_dim()) throw std::invalid_argument("OneDWorld: bad observation width");
  if (!opts_.one_hot) {
    const int p = observation_index(Observation{s[0]});
    if (p < 0 || p >= opts_.num_cells) throw std::invalid_argument("OneDWorld: observation outside the world");
    return p;
  }
  const auto end = s.begin() + opts_.num_cells;
  return static_cast<int>(std::max_element(s.begin(), end) - s.begin());
}

int OneDWorld::gust(const Observation& s) const {
  if (opts_.reward != OneDReward::gust) return 0;
  if (s.size() != observation_dim()) throw std::invalid_argument("OneDWorld: bad observation width");
  return s.back() >= 0.5 ? 1 : 0;
}

Observation OneDWorld::observe(int cell, int gust) const {
  Observation o;
  if (!opts_.one_hot) {
    o.push_back(static_cast<double>(cell));
  } else {
    o.assign(static_cast<std::size_t>(opts_.num_cells), 0.0);
    o[static_cast<std::size_t>(cell)] = 1.0;
  }
  if (opts_.reward == OneDReward::gust) o.push_back(static_cast<double>(gust));
  return o;
}

int OneDWorld::move_of(const Action& a) const {
  if (opts_.continuous) {
    if (a.size() != 1) throw std::invalid_argument("OneDWorld: expected a 1-D action");
    return a[0] >= 0.0 ? 1 : -1;
  }
  const int i = action_index(a);
  if (i != 0 && i != 1) throw std::invalid_argument("OneDWorld: action must be 0 (left) or 1 (right)");
  return i == 1 ? 1 : -1;
}

int OneDWorld::preferred_move(int cell) const { return (cell % 4) < 2 ? 1 : -1; }

Observation OneDWorld::reset(Rng& rng) const {
  const int g = opts_.reward == OneDReward::gust ? static_cast<int>(rng.uniform_index(2)) : 0;
  if (opts_.start >= 0) return observe(opts_.start, g);
  const int cells = ring() ? opts_.num_cells : opts_.num_cells - 1;
  return observe(static_cast<int>(rng.uniform_index(static_cast<std::size_t>(cells))), g);
}

EnvStep OneDWorld::step(const Observation& s, const Action& a, Rng& rng) const {
  const int p = position(s);
  int move = move_of(a);
  if (opts_.slip > 0.0 && rng.uniform() < opts_.slip) move = -move;
  const int n = opts_.num_cells;
  EnvStep out;
  if (opts_.reward == OneDReward::pattern) {
    out.reward = move == preferred_move(p) ? 1.0 : 0.0;
    out.next_observation = observe(((p + move) % n + n) % n);
    return out;
  }
  if (opts_.reward == OneDReward::gust) {
    out.reward = move == preferred_move(p) ? 1.0 : 0.0;
    const int next = ((p + move + 2 * gust(s)) % n + n) % n;
    out.next_observation = observe(next, static_cast<int>(rng.uniform_index(2)));
    return out;
  }
  const int next = std::clamp(p + move, 0, n - 1);
  out.next_observation = observe(next);
  out.terminal = next == n - 1;
  if (opts_.reward == OneDReward::goal) {
    out.reward = out.terminal ? 1.0 : 0.0;
  } else {
    out.reward = static_cast<double>(next - p);
  }
  return out;
}

PointMass::PointMass(PointMassOptions opts) : opts_(opts) {
  if (!(opts_.dt > 0.0) || !(opts_.wall > 0.0) || !(opts_.max_speed > 0.0) || opts_.noise < 0.0)
    throw std::invalid_argument("PointMass: dt, wall and max_speed must be positive");
}

Observation PointMass::reset(Rng& rng) const { return Observation{rng.uniform(-opts_.wall, opts_.wall), 0.0}; }

EnvStep PointMass::step(const Observation& s, const Action& a, Rng& rng) const {
  if (s.size() != 2 || a.size() != 1) throw std::invalid_argument("PointMass: bad observation or action width");
  const double u = std::clamp(a[0], -1.0, 1.0);
  double v = s[1] + opts_.accel * u * opts_.dt;
  if (opts_.noise > 0.0) v += opts_.noise * rng.normal();
  v = std::clamp(v, -opts_.max_speed, opts_.max_speed);
  double x = s[0] + v * opts_.dt;
  if (x > opts_.wall || x < -opts_.wall) {
    x = std::clamp(x, -opts_.wall, opts_.wall);
    v = 0.0;
  }
  const double err = x - opts_.goal;
  return EnvStep{Observation{x, v}, -err * err * opts_.dt, false};
}

BinaryActionEnv::BinaryActionEnv(std::shared_ptr<const Environment> inner) : inner_(std::move(inner)) {
  const ActionSpace s = inner_->action_space();
  if (s.kind != ActionKind::discrete || s.size != 2)
    throw std::invalid_argument("BinaryActionEnv: inner environment must have exactly two discrete actions");
}

EnvStep BinaryActionEnv::step(const Observation& s, const Action& a, Rng& rng) const {
  if (a.size() != 1) throw std::invalid_argument("BinaryActionEnv: expected a 1-D action");
  return inner_->step(s, discrete_action(a[0] >= 0.0 ? 1 : 0), rng);
}

}  // namespace rdmdp
