#pragma once

#include "rdmdp/delay_process.hpp"
#include "rdmdp/rng.hpp"
#include "rdmdp/types.hpp"

namespace rdmdp {

struct FDeltaSample {
  Observation obs;
  int act_delay = 1;
  double reward = 0.0;
  bool terminal = false;
};

/// Variable-step update: advances the undelayed environment delta + 1 times from
/// x.obs. Level l = 0..delta draws beta_l ~ p_beta(.|beta_{l-1}) (beta_{-1} = x.beta)
/// and applies u[(alpha - l) + beta_l] with u[0] = a, summing the rewards.
/// delta = -1 returns (x.obs, x.beta, 0). An undelayed terminal stops the unroll.
/// Throws ContractViolation if an action index leaves [0, K].
FDeltaSample f_delta_sample(int delta, const AugmentedState& x, const Action& a, const Environment& env,
                            const DelayProcess& p_beta, Rng& rng);

struct DelayedStep {
  AugmentedState next;
  double reward = 0.0;
  bool terminal = false;
};

/// One transition of the randomly delayed MDP: alpha' ~ p_alpha(.|alpha),
/// u' = buffer_push(u, a), (s', beta', r') from f_delta_sample with
/// delta = alpha - alpha'. kappa is left empty (only the channel knows it).
/// Throws ContractViolation if p_alpha proposes alpha' > alpha + 1.
DelayedStep rdmdp_step(const AugmentedState& x, const Action& a, const Environment& env, const DelayProcess& p_alpha,
                       const DelayProcess& p_beta, Rng& rng);

/// Constant-delay transition, written out directly rather than through DelayProcess.
DelayedStep cdmdp_step(const AugmentedState& x, const Action& a, const Environment& env, int alpha, int beta, Rng& rng);

/// Episode start <s0, (c, ..., c), max_alpha, max_beta> with K = max_alpha + max_beta
/// and c the environment's null action.
AugmentedState rdmdp_reset(const Environment& env, int max_alpha, int max_beta, Rng& rng);

}  // namespace rdmdp
