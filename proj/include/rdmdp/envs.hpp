#pragma once

#include <memory>
#include <string>

#include "rdmdp/types.hpp"

namespace rdmdp {

enum class OneDReward {
  goal,     // +1 and terminal on reaching the rightmost cell
  delta,    // per-step position change; terminal on reaching the rightmost cell
  pattern,  // ring world, +1 when the applied move matches the cell's preferred direction
  gust,     // pattern rewards; a visible gust bit pushes the walker two extra cells right
};

OneDReward parse_oned_reward(const std::string& name);
std::string oned_reward_name(OneDReward r);

struct OneDWorldOptions {
  int num_cells = 7;
  std::size_t horizon = 50;
  OneDReward reward = OneDReward::goal;
  /// Start cell; -1 draws uniformly among the cells that are not terminal.
  int start = -1;
  /// Probability that a move goes the opposite way.
  double slip = 0.0;
  /// Continuous 1-D action (a >= 0 moves right) instead of {0 = left, 1 = right}.
  bool continuous = false;
  /// One-hot observation instead of the bare cell index.
  bool one_hot = false;

  friend bool operator==(const OneDWorldOptions&, const OneDWorldOptions&) = default;
};

/// Cells 0..num_cells-1 with left/right moves. In pattern mode the world is a ring
/// and cell p prefers "right" when p mod 4 is 0 or 1 and "left" otherwise, so the
/// rewarded move depends on where the previous (still in flight) move lands.
///
/// Gust mode appends a gust bit g to the observation, redrawn uniformly every
/// step, and moves p -> p + move + 2g. Cells p+1 and p-1 (and their gusted
/// images) prefer opposite moves, so without the in-flight action the next cell
/// is a coin flip and a uniform policy is a fixed point for observation-only
/// learners.
class OneDWorld final : public Environment {
 public:
  explicit OneDWorld(OneDWorldOptions opts = {});

  ActionSpace action_space() const override;
  std::size_t observation_dim() const override;
  Observation reset(Rng& rng) const override;
  EnvStep step(const Observation& s, const Action& a, Rng& rng) const override;
  std::size_t horizon() const override { return opts_.horizon; }
  std::string name() const override { return "oned"; }

  const OneDWorldOptions& options() const { return opts_; }
  int position(const Observation& s) const;
  Observation observe(int cell, int gust = 0) const;
  /// Gust bit of an observation (0 outside gust mode).
  int gust(const Observation& s) const;
  /// +1 for right, -1 for left.
  int move_of(const Action& a) const;
  int preferred_move(int cell) const;

 private:
  bool ring() const { return opts_.reward == OneDReward::pattern || opts_.reward == OneDReward::gust; }

  OneDWorldOptions opts_;
};

struct PointMassOptions {
  double dt = 0.1;
  double accel = 1.0;    // acceleration per unit action
  double goal = 0.0;
  double wall = 1.0;     // |x| <= wall
  double max_speed = 1.0;
  double noise = 0.0;    // std of velocity noise per step
  std::size_t horizon = 100;

  friend bool operator==(const PointMassOptions&, const PointMassOptions&) = default;
};

/// 1-D double integrator x'' = clip(a) with walls, reward -(x - goal)^2 * dt.
/// Observation (x, v); episodes start at rest at a uniform position.
class PointMass final : public Environment {
 public:
  explicit PointMass(PointMassOptions opts = {});

  ActionSpace action_space() const override { return ActionSpace{ActionKind::continuous, 1}; }
  std::size_t observation_dim() const override { return 2; }
  Observation reset(Rng& rng) const override;
  EnvStep step(const Observation& s, const Action& a, Rng& rng) const override;
  std::size_t horizon() const override { return opts_.horizon; }
  std::string name() const override { return "pointmass"; }

  const PointMassOptions& options() const { return opts_; }

 private:
  PointMassOptions opts_;
};

/// Exposes a two-action environment through a 1-D continuous action:
/// a >= 0 selects action 1, a < 0 action 0.
class BinaryActionEnv final : public Environment {
 public:
  explicit BinaryActionEnv(std::shared_ptr<const Environment> inner);

  ActionSpace action_space() const override { return ActionSpace{ActionKind::continuous, 1}; }
  std::size_t observation_dim() const override { return inner_->observation_dim(); }
  Observation reset(Rng& rng) const override { return inner_->reset(rng); }
  EnvStep step(const Observation& s, const Action& a, Rng& rng) const override;
  std::size_t horizon() const override { return inner_->horizon(); }
  std::string name() const override { return inner_->name(); }

  const Environment& inner() const { return *inner_; }

 private:
  std::shared_ptr<const Environment> inner_;
};

}  // namespace rdmdp
