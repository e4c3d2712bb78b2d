#include "rdmdp/policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rdmdp {

namespace {

constexpr double kMinusInfinity = -std::numeric_limits<double>::infinity();

void check_row(const Vector& row, int num_actions) {
  if (row.size() != static_cast<std::size_t>(num_actions))
    throw std::invalid_argument("TabularPolicy: row length differs from num_actions");
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("TabularPolicy: probability outside [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("TabularPolicy: row does not sum to 1");
}

}  // namespace

const Vector& TabularPolicy::probs(const AugmentedState& x) const {
  if (!per_state.empty()) {
    auto it = per_state.find(state_key(x));
    if (it != per_state.end()) return it->second;
  }
  const int s = observation_index(x.obs);
  if (s < 0 || static_cast<std::size_t>(s) >= per_obs.size())
    throw std::invalid_argument("TabularPolicy: no row for observation " + std::to_string(s));
  return per_obs[static_cast<std::size_t>(s)];
}

void TabularPolicy::validate() const {
  if (num_actions <= 0) throw std::invalid_argument("TabularPolicy: num_actions must be positive");
  for (const Vector& row : per_obs) check_row(row, num_actions);
  for (const auto& [key, row] : per_state) check_row(row, num_actions);
}

TabularPolicy TabularPolicy::uniform(int num_states, int num_actions) {
  TabularPolicy p;
  p.num_actions = num_actions;
  p.per_obs.assign(static_cast<std::size_t>(num_states), Vector(static_cast<std::size_t>(num_actions), 1.0 / num_actions));
  return p;
}

TabularPolicy TabularPolicy::always(int num_states, int num_actions, int action) {
  if (action < 0 || action >= num_actions) throw std::invalid_argument("TabularPolicy::always: bad action");
  TabularPolicy p;
  p.num_actions = num_actions;
  Vector row(static_cast<std::size_t>(num_actions), 0.0);
  row[static_cast<std::size_t>(action)] = 1.0;
  p.per_obs.assign(static_cast<std::size_t>(num_states), row);
  return p;
}

std::pair<Vector, Vector> GaussianMlpPolicy::head(const AugmentedState& x) const {
  const nn::Matrix out = net->predict(encoder.encode(x));
  const std::size_t d = action_dim();
  if (static_cast<std::size_t>(out.cols()) != 2 * d) throw std::invalid_argument("GaussianMlpPolicy: head width mismatch");
  Vector mean(d), log_std(d);
  for (std::size_t j = 0; j < d; ++j) {
    mean[j] = out(0, static_cast<Eigen::Index>(j));
    log_std[j] = std::min(std::max(out(0, static_cast<Eigen::Index>(d + j)), log_std_min), log_std_max);
  }
  return {mean, log_std};
}

PolicySample policy_sample(const Policy& pi, const AugmentedState& x, Rng& rng) {
  x.validate();
  return std::visit(
      [&](const auto& p) -> PolicySample {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TabularPolicy>) {
          const Vector& row = p.probs(x);
          const auto a = static_cast<int>(rng.categorical(row));
          return {discrete_action(a), std::log(row[static_cast<std::size_t>(a)])};
        } else if constexpr (std::is_same_v<T, ConstantPolicy>) {
          return {p.action, 0.0};
        } else if constexpr (std::is_same_v<T, UniformPolicy>) {
          if (p.space.kind == ActionKind::discrete) {
            const auto a = static_cast<int>(rng.uniform_index(p.space.size));
            return {discrete_action(a), -std::log(static_cast<double>(p.space.size))};
          }
          Action a(p.space.size);
          for (double& v : a) v = rng.uniform(-1.0, 1.0);
          return {a, -static_cast<double>(p.space.size) * std::log(2.0)};
        } else {
          auto [mean, log_std] = p.head(x);
          Action a(mean.size());
          for (std::size_t j = 0; j < mean.size(); ++j) a[j] = std::tanh(mean[j] + std::exp(log_std[j]) * rng.normal());
          return {a, nn::squashed_gaussian_log_prob(mean, log_std, a, p.log_std_min, p.log_std_max)};
        }
      },
      pi.impl);
}

double policy_log_prob(const Policy& pi, const AugmentedState& x, const Action& a) {
  x.validate();
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TabularPolicy>) {
          const Vector& row = p.probs(x);
          const int i = action_index(a);
          if (i < 0 || static_cast<std::size_t>(i) >= row.size()) throw std::invalid_argument("policy_log_prob: action out of range");
          return row[static_cast<std::size_t>(i)] > 0.0 ? std::log(row[static_cast<std::size_t>(i)]) : kMinusInfinity;
        } else if constexpr (std::is_same_v<T, ConstantPolicy>) {
          return a == p.action ? 0.0 : kMinusInfinity;
        } else if constexpr (std::is_same_v<T, UniformPolicy>) {
          if (!p.space.contains(a)) return kMinusInfinity;
          if (p.space.kind == ActionKind::discrete) return -std::log(static_cast<double>(p.space.size));
          return -static_cast<double>(p.space.size) * std::log(2.0);
        } else {
          auto [mean, log_std] = p.head(x);
          return nn::squashed_gaussian_log_prob(mean, log_std, a, p.log_std_min, p.log_std_max);
        }
      },
      pi.impl);
}

Action policy_mode(const Policy& pi, const AugmentedState& x) {
  x.validate();
  return std::visit(
      [&](const auto& p) -> Action {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TabularPolicy>) {
          const Vector& row = p.probs(x);
          std::size_t best = 0;
          for (std::size_t i = 1; i < row.size(); ++i)
            if (row[i] > row[best]) best = i;
          return discrete_action(static_cast<int>(best));
        } else if constexpr (std::is_same_v<T, ConstantPolicy>) {
          return p.action;
        } else if constexpr (std::is_same_v<T, UniformPolicy>) {
          return p.space.null_action();
        } else {
          auto [mean, log_std] = p.head(x);
          Action a(mean.size());
          for (std::size_t j = 0; j < mean.size(); ++j) a[j] = std::tanh(mean[j]);
          return a;
        }
      },
      pi.impl);
}

Vector policy_probs(const Policy& pi, const AugmentedState& x, int num_actions) {
  return std::visit(
      [&](const auto& p) -> Vector {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TabularPolicy>) {
          return p.probs(x);
        } else if constexpr (std::is_same_v<T, ConstantPolicy>) {
          Vector row(static_cast<std::size_t>(num_actions), 0.0);
          const int i = action_index(p.action);
          if (i < 0 || i >= num_actions) throw std::invalid_argument("policy_probs: constant action out of range");
          row[static_cast<std::size_t>(i)] = 1.0;
          return row;
        } else if constexpr (std::is_same_v<T, UniformPolicy>) {
          return Vector(static_cast<std::size_t>(num_actions), 1.0 / num_actions);
        } else {
          throw std::invalid_argument("policy_probs: continuous policies have no probability table");
        }
      },
      pi.impl);
}

}  // namespace rdmdp
