#include "rdmdp/rdmdp.hpp"

#include <stdexcept>
#include <string>

#include "rdmdp/errors.hpp"

namespace rdmdp {

namespace {

const Action& buffer_action(const AugmentedState& x, const Action& a, int index) {
  const int k = static_cast<int>(x.buffer.capacity());
  if (index < 0 || index > k)
    throw ContractViolation("f_delta: action index " + std::to_string(index) + " outside [0, " + std::to_string(k) +
                            "]; delay maxima inconsistent with K");
  return index == 0 ? a : x.buffer[static_cast<std::size_t>(index)];
}

}  // namespace

FDeltaSample f_delta_sample(int delta, const AugmentedState& x, const Action& a, const Environment& env,
                            const DelayProcess& p_beta, Rng& rng) {
  if (delta < -1) throw std::invalid_argument("f_delta_sample: delta must be >= -1");
  FDeltaSample out{x.obs, x.act_delay, 0.0, false};
  for (int level = 0; level <= delta; ++level) {
    const int beta = p_beta.sample(out.act_delay, rng);
    const Action& applied = buffer_action(x, a, x.obs_delay - level + beta);
    EnvStep step = env.step(out.obs, applied, rng);
    out.obs = std::move(step.next_observation);
    out.act_delay = beta;
    out.reward += step.reward;
    if (step.terminal) {
      out.terminal = true;
      break;
    }
  }
  return out;
}

DelayedStep rdmdp_step(const AugmentedState& x, const Action& a, const Environment& env, const DelayProcess& p_alpha,
                       const DelayProcess& p_beta, Rng& rng) {
  x.validate(p_alpha.max_delay(), p_beta.max_delay());
  const int alpha_next = p_alpha.sample(x.obs_delay, rng);
  if (alpha_next > x.obs_delay + 1)
    throw ContractViolation("rdmdp_step: observation delay jumped from " + std::to_string(x.obs_delay) + " to " +
                            std::to_string(alpha_next));
  FDeltaSample f = f_delta_sample(x.obs_delay - alpha_next, x, a, env, p_beta, rng);
  DelayedStep out;
  out.next.obs = std::move(f.obs);
  out.next.buffer = buffer_push(x.buffer, a);
  out.next.obs_delay = alpha_next;
  out.next.act_delay = f.act_delay;
  out.reward = f.reward;
  out.terminal = f.terminal;
  out.next.validate(p_alpha.max_delay(), p_beta.max_delay());
  return out;
}

DelayedStep cdmdp_step(const AugmentedState& x, const Action& a, const Environment& env, int alpha, int beta, Rng& rng) {
  x.validate(alpha > x.obs_delay ? alpha : x.obs_delay, beta > x.act_delay ? beta : x.act_delay);
  if (alpha > x.obs_delay + 1)
    throw ContractViolation("cdmdp_step: observation delay jumped from " + std::to_string(x.obs_delay) + " to " +
                            std::to_string(alpha));
  DelayedStep out;
  out.next.obs = x.obs;
  out.next.buffer = buffer_push(x.buffer, a);
  out.next.obs_delay = alpha;
  out.next.act_delay = x.act_delay;
  for (int level = 0; level <= x.obs_delay - alpha; ++level) {
    const int index = x.obs_delay - level + beta;
    if (index < 1 || index > static_cast<int>(x.buffer.capacity()))
      throw ContractViolation("cdmdp_step: action index " + std::to_string(index) + " outside the buffer");
    EnvStep step = env.step(out.next.obs, x.buffer[static_cast<std::size_t>(index)], rng);
    out.next.obs = std::move(step.next_observation);
    out.next.act_delay = beta;
    out.reward += step.reward;
    if (step.terminal) {
      out.terminal = true;
      break;
    }
  }
  out.next.validate();
  return out;
}

AugmentedState rdmdp_reset(const Environment& env, int max_alpha, int max_beta, Rng& rng) {
  if (max_alpha < 0 || max_beta < 1) throw std::invalid_argument("rdmdp_reset: need max_alpha >= 0, max_beta >= 1");
  AugmentedState x;
  x.obs = env.reset(rng);
  x.buffer = ActionBuffer(static_cast<std::size_t>(max_alpha + max_beta), env.null_action());
  x.obs_delay = max_alpha;
  x.act_delay = max_beta;
  return x;
}

}  // namespace rdmdp
