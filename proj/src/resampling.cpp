#include "rdmdp/resampling.hpp"

#include <string>

#include "rdmdp/errors.hpp"

namespace rdmdp {

void ValidSubTrajectory::validate() const {
  const std::size_t k = start.buffer.capacity();
  if (steps.size() > k)
    throw ContractViolation("fragment of length " + std::to_string(steps.size()) + " exceeds K = " + std::to_string(k));
  for (std::size_t t = 1; t <= steps.size(); ++t) {
    const AugmentedState& x = steps[t - 1].state;
    if (x.buffer.capacity() != k) throw ContractViolation("fragment buffers change length at t = " + std::to_string(t));
    if (static_cast<std::size_t>(x.obs_delay + x.act_delay) < t)
      throw ContractViolation("delay condition violated at t = " + std::to_string(t) + " (alpha + beta = " +
                              std::to_string(x.obs_delay + x.act_delay) + ")");
    if (steps[t - 1].terminal && t != steps.size())
      throw ContractViolation("interior terminal at t = " + std::to_string(t));
  }
}

std::size_t validity_length(const Trajectory& traj, std::size_t start_index) {
  if (start_index > traj.size()) throw std::invalid_argument("validity_length: start index past the trajectory");
  const auto& recs = traj.records();
  const std::size_t k = traj.state_at(start_index).buffer.capacity();
  std::size_t n = 0;
  for (std::size_t t = 1; t <= k && start_index + t - 1 < recs.size(); ++t) {
    const TrajectoryRecord& r = recs[start_index + t - 1];
    if (static_cast<std::size_t>(r.state.obs_delay + r.state.act_delay) < t) break;
    n = t;
    if (r.terminal) break;
  }
  return n;
}

ValidSubTrajectory fragment_at(const Trajectory& traj, std::size_t start_index) {
  return fragment_at(traj, start_index, validity_length(traj, start_index));
}

ValidSubTrajectory fragment_at(const Trajectory& traj, std::size_t start_index, std::size_t n) {
  const std::size_t valid = validity_length(traj, start_index);
  if (n > valid)
    throw ContractViolation("fragment_at: requested n = " + std::to_string(n) + " but the condition fails at t = " +
                            std::to_string(valid + 1));
  ValidSubTrajectory f{traj.state_at(start_index), {}};
  const auto& recs = traj.records();
  f.steps.assign(recs.begin() + static_cast<std::ptrdiff_t>(start_index),
                 recs.begin() + static_cast<std::ptrdiff_t>(start_index + n));
  return f;
}

ResampledFragment resample_partial(const Policy& pi, const AugmentedState& x0, const ValidSubTrajectory& traj, Rng& rng) {
  traj.validate();
  if (x0.buffer.capacity() != traj.start.buffer.capacity())
    throw ContractViolation("resample_partial: start buffer length differs from the fragment");
  ResampledFragment out;
  out.fragment.start = x0;
  out.fragment.steps.reserve(traj.length());
  out.actions.reserve(traj.length());
  out.log_probs.reserve(traj.length());
  const AugmentedState* prev = &x0;
  for (const TrajectoryRecord& r : traj.steps) {
    PolicySample s = policy_sample(pi, *prev, rng);
    TrajectoryRecord next = r;
    next.state.buffer = buffer_push(prev->buffer, s.action);
    out.actions.push_back(std::move(s.action));
    out.log_probs.push_back(s.log_prob);
    out.fragment.steps.push_back(std::move(next));
    prev = &out.fragment.steps.back().state;
  }
  return out;
}

}  // namespace rdmdp
