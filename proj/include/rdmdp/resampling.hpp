#pragma once

#include <vector>

#include "rdmdp/policy.hpp"
#include "rdmdp/trajectory.hpp"

namespace rdmdp {

/// Start state x0 followed by n records whose delays satisfy alpha_t + beta_t >= t.
/// A terminal record may only close the fragment.
struct ValidSubTrajectory {
  AugmentedState start;
  std::vector<TrajectoryRecord> steps;

  std::size_t length() const { return steps.size(); }
  bool ends_terminal() const { return !steps.empty() && steps.back().terminal; }
  /// Last state of the fragment (start when n = 0).
  const AugmentedState& tail() const { return steps.empty() ? start : steps.back().state; }
  /// Throws ContractViolation naming the first offending t.
  void validate() const;
};

/// Largest n such that records t = 1..n after start_index satisfy the delay
/// condition and none before the n-th is terminal, capped at K.
std::size_t validity_length(const Trajectory& traj, std::size_t start_index);

/// Fragment of length n starting at state_at(start_index). n defaults to the
/// validity length; asking for more throws ContractViolation.
ValidSubTrajectory fragment_at(const Trajectory& traj, std::size_t start_index);
ValidSubTrajectory fragment_at(const Trajectory& traj, std::size_t start_index, std::size_t n);

struct ResampledFragment {
  ValidSubTrajectory fragment;
  /// a*_0 .. a*_{n-1}; a*_t ~ pi(.|x*_t).
  std::vector<Action> actions;
  std::vector<double> log_probs;
};

/// Replaces the t most recent buffer entries of every step t with fresh draws
/// from pi. Observations, delays and rewards are copied untouched.
ResampledFragment resample_partial(const Policy& pi, const AugmentedState& x0, const ValidSubTrajectory& traj, Rng& rng);

}  // namespace rdmdp
