#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rdmdp {

/// Outcome of one exact or property check: the measured worst-case error
/// against a pinned tolerance.
struct CheckResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct BiasRow {
  int n = 0;
  double gamma = 0.0;
  bool off_policy = false;
  double measured = 0.0;
  double expected = 0.0;
};

/// Bias ratio of the n-step estimator for a constant-offset tail on a random
/// 3-state MDP with alpha = 2, beta = 3; on-policy and through resampled
/// fragments of a second policy.
std::vector<BiasRow> bias_ratio_rows(double gamma, const std::vector<int>& ns, std::uint64_t seed);
/// CSV `n,gamma,policy,measured_ratio,expected_ratio`.
void write_bias_rows(std::ostream& out, const std::vector<BiasRow>& rows);

/// |E[v_hat_n] - v^pi| with an exact tail, over random-delay fixtures, n <= 3.
CheckResult unbiasedness_check(std::uint64_t seed);
/// Stationary-weighted bias ratio against gamma^n on an ergodic 3-state fixture.
CheckResult steady_state_bias_check(double gamma, std::uint64_t seed);
/// The K = 3 walkthrough: validity length 2 and buffers (R,L,L), (R,R,L).
CheckResult validity_demo_check();
/// Constant-latency channel vs cdmdp_step over `steps` ticks (exact match).
CheckResult channel_equivalence_check(long steps, std::uint64_t seed);
/// Sum of delayed rewards equals the sum of undelayed rewards per episode.
CheckResult reward_telescoping_check(int episodes, std::uint64_t seed);
/// alpha never grows by more than one per step over `steps` random-delay steps.
CheckResult delay_growth_check(long steps, std::uint64_t seed);

struct GradientReport {
  std::string agent;
  double critic_rel_error = 0.0;
  double actor_rel_error = 0.0;
};

/// Central differences (h = 1e-5) against the tape gradients on 2 x 8 tanh
/// networks; dcac runs through 3-step fragments (alpha = 1, beta = 2).
std::vector<GradientReport> gradient_check(std::uint64_t seed);

}  // namespace rdmdp
