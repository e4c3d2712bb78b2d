#include "rdmdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "rdmdp/errors.hpp"

namespace rdmdp::oracle {

namespace {

// Fixed-size work chunks keep merge order (and so rounding) independent of the
// number of OpenMP threads.
constexpr std::size_t kChunk = 64;

struct OutcomeKey {
  int next;
  double reward;
  bool terminal;
  auto operator<=>(const OutcomeKey&) const = default;
};

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

AugmentedFiniteMDP::AugmentedFiniteMDP(FiniteMDP base, DelayProcess p_alpha, DelayProcess p_beta)
    : base_(std::move(base)), p_alpha_(std::move(p_alpha)), p_beta_(std::move(p_beta)) {
  base_.validate();
  p_alpha_.validate_observation();
  if (p_beta_.min_delay() < 1) throw std::invalid_argument("AugmentedFiniteMDP: action delays must be >= 1");
  k_ = p_alpha_.max_delay() + p_beta_.max_delay();
  const std::vector<int> alphas = p_alpha_.reachable(), betas = p_beta_.reachable();
  const int na = base_.num_actions;
  const double count = static_cast<double>(base_.num_states) * std::pow(static_cast<double>(na), k_) *
                       static_cast<double>(alphas.size() * betas.size());
  if (count > static_cast<double>(kMaxStates))
    throw CapacityError("augmented state space has " + std::to_string(static_cast<long long>(count)) +
                        " states, above the limit of " + std::to_string(kMaxStates));
  long codes = 1;
  for (int i = 0; i < k_; ++i) codes *= na;

  states_.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < base_.num_states; ++s)
    for (long c = 0; c < codes; ++c) {
      std::vector<Action> entries;
      long rest = c;
      for (int i = 0; i < k_; ++i) {
        entries.push_back(discrete_action(static_cast<int>(rest % na)));
        rest /= na;
      }
      ActionBuffer u(entries);
      for (int alpha : alphas)
        for (int beta : betas) {
          AugmentedState x{Observation{static_cast<double>(s)}, u, alpha, beta, std::nullopt};
          index_.emplace(state_key(x), static_cast<int>(states_.size()));
          states_.push_back(std::move(x));
        }
    }

  const int n = num_states();
  rows_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(na));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    try {
      const AugmentedState& x = states_[static_cast<std::size_t>(i)];
      for (int a = 0; a < na; ++a) {
        std::vector<Outcome>& out = rows_[static_cast<std::size_t>(i) * na + a];
        if (is_terminal_obs(i)) {
          out.push_back(Outcome{i, 0.0, true, 1.0});
          continue;
        }
        const Action act = discrete_action(a);
        const ActionBuffer pushed = buffer_push(x.buffer, act);
        std::map<OutcomeKey, double> merged;
        const Vector& arow = p_alpha_.row(x.obs_delay);
        for (std::size_t an = 0; an < arow.size(); ++an) {
          if (arow[an] <= 0.0) continue;
          const int alpha_next = static_cast<int>(an);
          for (const auto& [f, p] : exact_f(x.obs_delay - alpha_next, x, act)) {
            AugmentedState y{Observation{static_cast<double>(f.obs)}, pushed, alpha_next, f.act_delay, std::nullopt};
            merged[OutcomeKey{index_of(y), f.reward, f.terminal}] += arow[an] * p;
          }
        }
        for (const auto& [key, p] : merged) out.push_back(Outcome{key.next, key.reward, key.terminal, p});
      }
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  rethrow_first(errors);
}

int AugmentedFiniteMDP::index_of(const AugmentedState& x) const {
  auto it = index_.find(state_key(x));
  if (it == index_.end()) throw std::out_of_range("AugmentedFiniteMDP: state outside the index");
  return it->second;
}

int AugmentedFiniteMDP::with_buffer(int i, const ActionBuffer& u) const {
  AugmentedState x = state(i);
  x.buffer = u;
  return index_of(x);
}

const std::vector<Outcome>& AugmentedFiniteMDP::row(int i, int a) const {
  return rows_[static_cast<std::size_t>(i) * static_cast<std::size_t>(base_.num_actions) + static_cast<std::size_t>(a)];
}

bool AugmentedFiniteMDP::is_terminal_obs(int i) const {
  return base_.terminal[static_cast<std::size_t>(observation_index(state(i).obs))];
}

std::vector<std::pair<int, double>> AugmentedFiniteMDP::initial() const {
  std::vector<std::pair<int, double>> out;
  const ActionBuffer null(static_cast<std::size_t>(k_), discrete_action(0));
  for (int s = 0; s < base_.num_states; ++s) {
    const double p = base_.init[static_cast<std::size_t>(s)];
    if (p <= 0.0) continue;
    out.emplace_back(index_of(AugmentedState{Observation{static_cast<double>(s)}, null, p_alpha_.initial(),
                                             p_beta_.initial(), std::nullopt}),
                     p);
  }
  return out;
}

std::map<FOutcome, double> AugmentedFiniteMDP::exact_f(int delta, const AugmentedState& x, const Action& a) const {
  if (delta < -1) throw std::invalid_argument("exact_f: delta must be >= -1");
  std::map<FOutcome, double> out;
  const int k = static_cast<int>(x.buffer.capacity());
  std::function<void(int, int, int, double, double)> rec = [&](int level, int s, int beta, double reward, double prob) {
    if (level > delta) {
      out[FOutcome{s, beta, reward, false}] += prob;
      return;
    }
    const Vector& brow = p_beta_.row(beta);
    for (std::size_t bn = 0; bn < brow.size(); ++bn) {
      if (brow[bn] <= 0.0) continue;
      const int index = x.obs_delay - level + static_cast<int>(bn);
      if (index < 0 || index > k)
        throw ContractViolation("exact_f: action index " + std::to_string(index) + " outside [0, " +
                                std::to_string(k) + "]");
      const int act = action_index(index == 0 ? a : x.buffer[static_cast<std::size_t>(index)]);
      const double r = reward + base_.reward[static_cast<std::size_t>(s)][static_cast<std::size_t>(act)];
      const Vector& trow = base_.trans[static_cast<std::size_t>(s)][static_cast<std::size_t>(act)];
      for (std::size_t sn = 0; sn < trow.size(); ++sn) {
        if (trow[sn] <= 0.0) continue;
        const double p = prob * brow[bn] * trow[sn];
        if (base_.terminal[sn])
          out[FOutcome{static_cast<int>(sn), static_cast<int>(bn), r, true}] += p;
        else
          rec(level + 1, static_cast<int>(sn), static_cast<int>(bn), r, p);
      }
    }
  };
  rec(0, observation_index(x.obs), x.act_delay, 0.0, 1.0);
  return out;
}

std::unordered_map<StateKey, double, StateKeyHash> AugmentedFiniteMDP::value_table(const Vector& v) const {
  if (v.size() != states_.size()) throw std::invalid_argument("value_table: size mismatch");
  std::unordered_map<StateKey, double, StateKeyHash> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace(state_key(states_[i]), v[i]);
  return out;
}

std::vector<Vector> policy_table(const AugmentedFiniteMDP& aug, const Policy& pi) {
  std::vector<Vector> out(static_cast<std::size_t>(aug.num_states()));
  for (int i = 0; i < aug.num_states(); ++i) {
    out[static_cast<std::size_t>(i)] = policy_probs(pi, aug.state(i), aug.num_actions());
    if (out[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(aug.num_actions()))
      throw std::invalid_argument("policy_table: policy row has the wrong number of actions");
  }
  return out;
}

double TrajectoryDistribution::total() const {
  double t = 0.0;
  for (const auto& [k, p] : table) t += p;
  return t;
}

namespace {

using Table = std::map<std::vector<TrajStep>, double>;

struct Enumerator {
  const AugmentedFiniteMDP& aug;
  const std::vector<Vector>& pi;
  int n;
  std::size_t count = 0;

  void run(std::vector<TrajStep>& prefix, int x, double prob, Table& out) {
    if (static_cast<int>(prefix.size()) == n || (!prefix.empty() && prefix.back().terminal)) {
      if (++count > kMaxTrajectories) throw CapacityError("trajectory enumeration above the path limit");
      out[prefix] += prob;
      return;
    }
    const Vector& row = pi[static_cast<std::size_t>(x)];
    for (int a = 0; a < aug.num_actions(); ++a) {
      if (row[static_cast<std::size_t>(a)] <= 0.0) continue;
      for (const Outcome& o : aug.row(x, a)) {
        prefix.push_back(TrajStep{o.next, o.reward, o.terminal});
        run(prefix, o.next, prob * row[static_cast<std::size_t>(a)] * o.prob, out);
        prefix.pop_back();
      }
    }
  }
};

/// Runs `work(i, table)` for i in [0, n) in fixed chunks and merges the chunk
/// tables in index order.
template <class Work>
Table chunked(std::size_t n, Work work) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<Table> parts(chunks);
  std::vector<std::exception_ptr> errors(chunks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t c = 0; c < chunks; ++c) {
    try {
      for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) work(i, parts[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  rethrow_first(errors);
  Table out;
  for (Table& part : parts)
    for (auto& [key, p] : part) out[key] += p;
  return out;
}

TrajectoryDistribution enumerate_table(const AugmentedFiniteMDP& aug, const std::vector<Vector>& pi, int x0, int n) {
  if (n < 0) throw std::invalid_argument("enumerate_p_n: negative horizon");
  if (x0 < 0 || x0 >= aug.num_states()) throw std::invalid_argument("enumerate_p_n: start state outside the index");
  TrajectoryDistribution dist;
  dist.horizon = n;
  if (n == 0) {
    dist.table[{}] = 1.0;
    return dist;
  }
  struct Branch {
    TrajStep step;
    double prob;
  };
  std::vector<Branch> branches;
  const Vector& row = pi[static_cast<std::size_t>(x0)];
  for (int a = 0; a < aug.num_actions(); ++a) {
    if (row[static_cast<std::size_t>(a)] <= 0.0) continue;
    for (const Outcome& o : aug.row(x0, a))
      branches.push_back(Branch{TrajStep{o.next, o.reward, o.terminal}, row[static_cast<std::size_t>(a)] * o.prob});
  }
  dist.table = chunked(branches.size(), [&](std::size_t i, Table& out) {
    Enumerator e{aug, pi, n};
    std::vector<TrajStep> prefix{branches[i].step};
    e.run(prefix, branches[i].step.state, branches[i].prob, out);
  });
  return dist;
}

/// Smallest t at which some supported trajectory breaks the delay condition
/// (n_max + 1 when none does), exploring only prefixes shorter than the best so far.
void first_violation(const AugmentedFiniteMDP& aug, const std::vector<Vector>& mu, int x, int t, int& best) {
  if (t >= best) return;
  const Vector& row = mu[static_cast<std::size_t>(x)];
  for (int a = 0; a < aug.num_actions(); ++a) {
    if (row[static_cast<std::size_t>(a)] <= 0.0) continue;
    for (const Outcome& o : aug.row(x, a)) {
      const AugmentedState& y = aug.state(o.next);
      if (y.obs_delay + y.act_delay < t) {
        best = std::min(best, t);
        return;
      }
      if (!o.terminal) first_violation(aug, mu, o.next, t + 1, best);
      if (t >= best) return;
    }
  }
}

void resample_into(const AugmentedFiniteMDP& aug, const std::vector<Vector>& pi, const std::vector<TrajStep>& tau,
                   std::size_t t, int prev, double prob, std::vector<TrajStep>& out_prefix, Table& out) {
  if (t == tau.size()) {
    out[out_prefix] += prob;
    return;
  }
  const Vector& row = pi[static_cast<std::size_t>(prev)];
  for (int a = 0; a < aug.num_actions(); ++a) {
    const double p = row[static_cast<std::size_t>(a)];
    if (p <= 0.0) continue;
    const int next = aug.with_buffer(tau[t].state, buffer_push(aug.state(prev).buffer, discrete_action(a)));
    out_prefix.push_back(TrajStep{next, tau[t].reward, tau[t].terminal});
    resample_into(aug, pi, tau, t + 1, next, prob * p, out_prefix, out);
    out_prefix.pop_back();
  }
}

double estimator_mean(const TrajectoryDistribution& dist, int x0, const Vector& v0, double gamma) {
  double mean = 0.0;
  for (const auto& [tau, p] : dist.table) {
    double g = 0.0, discount = 1.0;
    for (const TrajStep& s : tau) {
      g += discount * s.reward;
      discount *= gamma;
    }
    const bool terminal = !tau.empty() && tau.back().terminal;
    if (!terminal) g += discount * v0[static_cast<std::size_t>(tau.empty() ? x0 : tau.back().state)];
    mean += p * g;
  }
  return mean;
}

double entropy_of(const Vector& row) {
  double h = 0.0;
  for (double p : row)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

}  // namespace

TrajectoryDistribution enumerate_p_n(const AugmentedFiniteMDP& aug, const Policy& pi, int x0, int n) {
  return enumerate_table(aug, policy_table(aug, pi), x0, n);
}

int max_valid_horizon(const AugmentedFiniteMDP& aug, const Policy& mu, int x0, int n_max) {
  const std::vector<Vector> table = policy_table(aug, mu);
  int best = n_max + 1;
  first_violation(aug, table, x0, 1, best);
  return best - 1;
}

SigmaCheck apply_sigma_exact(const AugmentedFiniteMDP& aug, const Policy& pi, const Policy& mu, int x0, int n) {
  const std::vector<Vector> pi_table = policy_table(aug, pi), mu_table = policy_table(aug, mu);
  TrajectoryDistribution behaviour = enumerate_table(aug, mu_table, x0, n);
  std::vector<std::pair<const std::vector<TrajStep>*, double>> items;
  items.reserve(behaviour.table.size());
  for (const auto& [tau, p] : behaviour.table) {
    for (std::size_t t = 1; t <= tau.size(); ++t) {
      const AugmentedState& y = aug.state(tau[t - 1].state);
      if (static_cast<std::size_t>(y.obs_delay + y.act_delay) < t)
        throw ContractViolation("apply_sigma_exact: delay condition violated at t = " + std::to_string(t) +
                                " by a supported behaviour trajectory");
    }
    items.emplace_back(&tau, p);
  }
  SigmaCheck out;
  out.lhs.horizon = n;
  out.lhs.table = chunked(items.size(), [&](std::size_t i, Table& table) {
    std::vector<TrajStep> prefix;
    resample_into(aug, pi_table, *items[i].first, 0, x0, items[i].second, prefix, table);
  });
  out.rhs = enumerate_table(aug, pi_table, x0, n);
  for (const auto& [key, p] : out.lhs.table) {
    auto it = out.rhs.table.find(key);
    out.max_abs_error = std::max(out.max_abs_error, std::abs(p - (it == out.rhs.table.end() ? 0.0 : it->second)));
  }
  for (const auto& [key, p] : out.rhs.table)
    if (!out.lhs.table.contains(key)) out.max_abs_error = std::max(out.max_abs_error, p);
  return out;
}

namespace {

struct Backup {
  const AugmentedFiniteMDP& aug;
  std::vector<Vector> pi;
  Vector bonus;  // per-state entropy bonus
  double gamma;

  double operator()(int i, const Vector& v) const {
    if (aug.is_terminal_obs(i)) return 0.0;
    const Vector& row = pi[static_cast<std::size_t>(i)];
    double total = bonus[static_cast<std::size_t>(i)];
    for (int a = 0; a < aug.num_actions(); ++a) {
      const double pa = row[static_cast<std::size_t>(a)];
      if (pa <= 0.0) continue;
      double q = 0.0;
      for (const Outcome& o : aug.row(i, a))
        q += o.prob * (o.reward + (o.terminal ? 0.0 : gamma * v[static_cast<std::size_t>(o.next)]));
      total += pa * q;
    }
    return total;
  }
};

Backup make_backup(const AugmentedFiniteMDP& aug, const Policy& pi, double gamma, double entropy_scale) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("value iteration needs gamma in [0, 1)");
  Backup b{aug, policy_table(aug, pi), Vector(static_cast<std::size_t>(aug.num_states()), 0.0), gamma};
  if (entropy_scale != 0.0)
    for (int i = 0; i < aug.num_states(); ++i)
      b.bonus[static_cast<std::size_t>(i)] = entropy_scale * entropy_of(b.pi[static_cast<std::size_t>(i)]);
  return b;
}

ValueResult iterate(const Backup& backup, double tol, long max_sweeps, bool parallel) {
  if (!(tol > 0.0)) throw std::invalid_argument("value iteration needs tol > 0");
  const int n = backup.aug.num_states();
  ValueResult res;
  res.v.assign(static_cast<std::size_t>(n), 0.0);
  Vector next(res.v.size());
  while (res.sweeps < max_sweeps) {
    double diff = 0.0;
    if (parallel) {
#pragma omp parallel for schedule(static) reduction(max : diff)
      for (int i = 0; i < n; ++i) {
        next[static_cast<std::size_t>(i)] = backup(i, res.v);
        diff = std::max(diff, std::abs(next[static_cast<std::size_t>(i)] - res.v[static_cast<std::size_t>(i)]));
      }
    } else {
      for (int i = 0; i < n; ++i) {
        next[static_cast<std::size_t>(i)] = backup(i, res.v);
        diff = std::max(diff, std::abs(next[static_cast<std::size_t>(i)] - res.v[static_cast<std::size_t>(i)]));
      }
    }
    res.v.swap(next);
    ++res.sweeps;
    if (diff < tol) return res;
  }
  throw NumericalError("value iteration did not converge within " + std::to_string(max_sweeps) + " sweeps");
}

}  // namespace

ValueResult value_iteration(const AugmentedFiniteMDP& aug, const Policy& pi, double gamma, double tol, long max_sweeps) {
  return iterate(make_backup(aug, pi, gamma, 0.0), tol, max_sweeps, true);
}

ValueResult soft_value_iteration(const AugmentedFiniteMDP& aug, const Policy& pi, double gamma, double entropy_scale,
                                 double tol, long max_sweeps) {
  return iterate(make_backup(aug, pi, gamma, entropy_scale), tol, max_sweeps, true);
}

ValueResult value_iteration_serial(const AugmentedFiniteMDP& aug, const Policy& pi, double gamma, double entropy_scale,
                                   double tol, long max_sweeps) {
  return iterate(make_backup(aug, pi, gamma, entropy_scale), tol, max_sweeps, false);
}

Vector evaluate_exact(const AugmentedFiniteMDP& aug, const Policy& pi, double gamma, double entropy_scale) {
  constexpr int kMaxDense = 6000;
  const int n = aug.num_states();
  if (n > kMaxDense) throw CapacityError("evaluate_exact: too many states for a dense solve");
  const Backup backup = make_backup(aug, pi, gamma, entropy_scale);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (aug.is_terminal_obs(i)) continue;
    const Vector& row = backup.pi[static_cast<std::size_t>(i)];
    r(i) = backup.bonus[static_cast<std::size_t>(i)];
    for (int act = 0; act < aug.num_actions(); ++act) {
      const double pa = row[static_cast<std::size_t>(act)];
      if (pa <= 0.0) continue;
      for (const Outcome& o : aug.row(i, act)) {
        r(i) += pa * o.prob * o.reward;
        if (!o.terminal) a(i, o.next) -= gamma * pa * o.prob;
      }
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd v = lu.solve(r);
  // Two rounds of iterative refinement bring the residual to rounding level.
  for (int k = 0; k < 2; ++k) v += lu.solve(r - a * v);
  return Vector(v.data(), v.data() + n);
}

Vector propagate(const AugmentedFiniteMDP& aug, const Policy& pi, const Vector& from, int n) {
  const std::vector<Vector> table = policy_table(aug, pi);
  Vector d = from;
  for (int step = 0; step < n; ++step) {
    Vector next(d.size(), 0.0);
    for (int i = 0; i < aug.num_states(); ++i) {
      const double m = d[static_cast<std::size_t>(i)];
      if (m == 0.0) continue;
      for (int a = 0; a < aug.num_actions(); ++a) {
        const double pa = table[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
        if (pa <= 0.0) continue;
        for (const Outcome& o : aug.row(i, a))
          if (!o.terminal) next[static_cast<std::size_t>(o.next)] += m * pa * o.prob;
      }
    }
    d.swap(next);
  }
  return d;
}

Vector steady_state(const AugmentedFiniteMDP& aug, const Policy& pi, const Vector& from, double tol, long max_iter) {
  if (from.size() != static_cast<std::size_t>(aug.num_states()))
    throw std::invalid_argument("steady_state: start distribution has the wrong size");
  Vector d = from;
  for (long it = 0; it < max_iter; ++it) {
    // Lazy chain: same stationary law, never periodic.
    Vector next = propagate(aug, pi, d, 1);
    double mass = 0.0, change = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      next[i] = 0.5 * (next[i] + d[i]);
      mass += next[i];
    }
    if (std::abs(mass - 1.0) > 1e-9) throw NumericalError("steady_state: the chain loses mass through terminals");
    for (std::size_t i = 0; i < d.size(); ++i) {
      next[i] /= mass;
      change += std::abs(next[i] - d[i]);
    }
    d.swap(next);
    if (change < tol) return d;
  }
  throw NumericalError("steady_state: power iteration did not converge");
}

double expected_v_hat_n(const AugmentedFiniteMDP& aug, const Policy& pi, const Policy* mu, int x0, int n,
                        const Vector& v0, double gamma) {
  if (mu != nullptr) return estimator_mean(apply_sigma_exact(aug, pi, *mu, x0, n).lhs, x0, v0, gamma);
  return estimator_mean(enumerate_p_n(aug, pi, x0, n), x0, v0, gamma);
}

double measure_bias_reduction(const BiasFixture& fixture, double b, int n, double gamma) {
  if (b == 0.0) throw std::invalid_argument("measure_bias_reduction: bias must be nonzero");
  if (fixture.aug == nullptr) throw std::invalid_argument("measure_bias_reduction: missing fixture");
  const Vector v = evaluate_exact(*fixture.aug, fixture.pi, gamma);
  Vector v0 = v;
  for (double& x : v0) x += b;
  const double e = expected_v_hat_n(*fixture.aug, fixture.pi, fixture.mu ? &*fixture.mu : nullptr, fixture.x0, n, v0,
                                    gamma);
  return (e - v[static_cast<std::size_t>(fixture.x0)]) / b;
}

TabularPolicy random_tabular_policy(const AugmentedFiniteMDP& aug, Rng& rng, bool deterministic) {
  TabularPolicy p;
  p.num_actions = aug.num_actions();
  const auto na = static_cast<std::size_t>(aug.num_actions());
  for (int i = 0; i < aug.num_states(); ++i) {
    Vector row(na, 0.0);
    if (deterministic) {
      row[rng.uniform_index(na)] = 1.0;
    } else {
      double total = 0.0;
      for (double& x : row) total += (x = 0.1 + rng.uniform());
      for (double& x : row) x /= total;
      double rest = 1.0;
      for (std::size_t a = 1; a < na; ++a) rest -= row[a];
      row[0] = rest;
    }
    p.per_state.emplace(state_key(aug.state(i)), std::move(row));
  }
  return p;
}

std::vector<FixtureResult> resampling_certificate(std::uint64_t seed, double tol) {
  struct DelaySpec {
    std::string name;
    DelayProcess pa, pb;
  };
  const std::vector<DelaySpec> delays = {
      {"const(1,1)", DelayProcess::constant(1), DelayProcess::constant(1)},
      {"const(1,2)", DelayProcess::constant(1), DelayProcess::constant(2)},
      {"random(1,2)", DelayProcess::uniform(0, 1, 0), DelayProcess::uniform(1, 2, 1)},
  };
  std::vector<FixtureResult> results;
  Rng rng(seed);
  for (int ns : {2, 3}) {
    FiniteMDP base = random_finite_mdp(ns, 2, rng);
    if (ns == 3) base.terminal[2] = true;
    for (const DelaySpec& d : delays) {
      AugmentedFiniteMDP aug(base, d.pa, d.pb);
      for (bool deterministic : {true, false}) {
        Policy mu{random_tabular_policy(aug, rng, deterministic), "mu"};
        Policy pi{random_tabular_policy(aug, rng, deterministic), "pi"};
        FixtureResult r;
        r.name = std::to_string(ns) + "s/" + d.name + "/" + (deterministic ? "det" : "stoch");
        int checked = 0;
        for (int x0 = 0; x0 < aug.num_states(); ++x0) {
          if (aug.is_terminal_obs(x0)) continue;
          const int n_max = max_valid_horizon(aug, mu, x0, 3);
          for (int n = 1; n <= n_max; ++n) {
            r.max_abs_error = std::max(r.max_abs_error, apply_sigma_exact(aug, pi, mu, x0, n).max_abs_error);
            ++checked;
          }
        }
        r.pass = checked > 0 && r.max_abs_error <= tol;
        results.push_back(r);
      }
    }
  }
  return results;
}

}  // namespace rdmdp::oracle
