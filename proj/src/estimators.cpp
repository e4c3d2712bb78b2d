#include "rdmdp/estimators.hpp"

#include <stdexcept>

namespace rdmdp {

ValueFunction ValueFunction::tabular(std::unordered_map<StateKey, double, StateKeyHash> table) {
  ValueFunction v;
  v.kind_ = ValueKind::tabular;
  v.table_ = std::make_shared<const std::unordered_map<StateKey, double, StateKeyHash>>(std::move(table));
  return v;
}

ValueFunction ValueFunction::mlp(std::shared_ptr<const nn::Mlp> net, Encoder encoder) {
  if (!net) throw std::invalid_argument("ValueFunction::mlp: null network");
  ValueFunction v;
  v.kind_ = ValueKind::mlp;
  v.net_ = std::move(net);
  v.encoder_ = encoder;
  return v;
}

ValueFunction ValueFunction::constant(double value) {
  ValueFunction v;
  v.value_ = value;
  return v;
}

ValueFunction ValueFunction::with_bias(double bias) const {
  ValueFunction v = *this;
  v.bias_ += bias;
  return v;
}

double ValueFunction::operator()(const AugmentedState& x) const {
  switch (kind_) {
    case ValueKind::tabular: return table_->at(state_key(x)) + bias_;
    case ValueKind::mlp: return net_->predict(encoder_.encode(x))(0, 0) + bias_;
    case ValueKind::constant: return value_ + bias_;
  }
  return 0.0;
}

double v_hat_n(const AugmentedState& x0, const ValidSubTrajectory& fragment, const ValueFunction& v0, double gamma) {
  double total = 0.0, discount = 1.0;
  for (const TrajectoryRecord& r : fragment.steps) {
    total += discount * r.reward;
    discount *= gamma;
  }
  if (!fragment.ends_terminal()) total += discount * v0(fragment.steps.empty() ? x0 : fragment.steps.back().state);
  return total;
}

EstimateReport v_hat_soft_n(const AugmentedState& x0, const ValidSubTrajectory& fragment,
                            const std::vector<double>& log_probs, const ValueFunction& v0, double gamma,
                            double entropy_scale) {
  if (log_probs.size() != fragment.length())
    throw std::invalid_argument("v_hat_soft_n: need one log-probability per fragment step");
  EstimateReport rep;
  rep.estimate = v_hat_n(x0, fragment, v0, gamma);
  rep.n_used = fragment.length();
  rep.gamma = gamma;
  if (entropy_scale == 0.0) return rep;
  double discount = 1.0;
  for (double lp : log_probs) {
    rep.entropy_terms.push_back(-entropy_scale * discount * lp);
    rep.estimate += rep.entropy_terms.back();
    discount *= gamma;
  }
  return rep;
}

double q_hat_1(const AugmentedState&, const Action&, const AugmentedState& successor, double reward, bool terminal,
               const ActionValueFn& q0, const Policy& pi, double gamma, Rng& rng) {
  if (terminal || gamma == 0.0) return reward;
  return reward + gamma * q0(successor, policy_sample(pi, successor, rng).action);
}

double q_hat_1_exact(const AugmentedState&, const Action&, const AugmentedState& successor, double reward,
                     bool terminal, const ActionValueFn& q0, const Policy& pi, int num_actions, double gamma) {
  if (terminal || gamma == 0.0) return reward;
  const Vector p = policy_probs(pi, successor, num_actions);
  double expected = 0.0;
  for (int a = 0; a < num_actions; ++a)
    if (p[static_cast<std::size_t>(a)] > 0.0) expected += p[static_cast<std::size_t>(a)] * q0(successor, discrete_action(a));
  return reward + gamma * expected;
}

}  // namespace rdmdp
