#include "rdmdp/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rdmdp {

int action_index(const Action& a) {
  if (a.size() != 1) throw std::invalid_argument("action_index: not a discrete action");
  return static_cast<int>(std::lround(a[0]));
}

int observation_index(const Observation& s) {
  if (s.size() != 1) throw std::invalid_argument("observation_index: not a tabular observation");
  return static_cast<int>(std::lround(s[0]));
}

Action ActionSpace::null_action() const {
  if (kind == ActionKind::discrete) return discrete_action(0);
  return Action(size, 0.0);
}

bool ActionSpace::contains(const Action& a) const {
  if (kind == ActionKind::discrete) {
    if (a.size() != 1) return false;
    const int i = action_index(a);
    return i >= 0 && static_cast<std::size_t>(i) < size && a[0] == static_cast<double>(i);
  }
  if (a.size() != size) return false;
  for (double v : a)
    if (!(v >= -1.0 && v <= 1.0)) return false;
  return true;
}

ActionBuffer::ActionBuffer(std::size_t capacity, const Action& fill) : entries_(capacity, fill) {
  if (capacity == 0) throw std::invalid_argument("ActionBuffer: capacity must be positive");
}

ActionBuffer::ActionBuffer(std::vector<Action> newest_first) : entries_(std::move(newest_first)) {
  if (entries_.empty()) throw std::invalid_argument("ActionBuffer: capacity must be positive");
}

const Action& ActionBuffer::operator[](std::size_t i) const {
  if (i < 1 || i > entries_.size())
    throw std::out_of_range("ActionBuffer: index " + std::to_string(i) + " outside [1, " +
                            std::to_string(entries_.size()) + "]");
  return entries_[i - 1];
}

void ActionBuffer::push(const Action& a) {
  for (std::size_t i = entries_.size() - 1; i > 0; --i) entries_[i] = std::move(entries_[i - 1]);
  entries_[0] = a;
}

ActionBuffer ActionBuffer::pushed(const Action& a) const {
  ActionBuffer out = *this;
  out.push(a);
  return out;
}

ActionBuffer buffer_push(const ActionBuffer& u, const Action& a) { return u.pushed(a); }

void AugmentedState::validate(int max_alpha, int max_beta) const {
  validate();
  if (obs_delay > max_alpha)
    throw std::invalid_argument("augmented state: alpha=" + std::to_string(obs_delay) +
                                " exceeds max_alpha=" + std::to_string(max_alpha));
  if (act_delay > max_beta)
    throw std::invalid_argument("augmented state: beta=" + std::to_string(act_delay) +
                                " exceeds max_beta=" + std::to_string(max_beta));
}

void AugmentedState::validate() const {
  if (buffer.capacity() == 0) throw std::invalid_argument("augmented state: empty action buffer");
  if (obs_delay < 0) throw std::invalid_argument("augmented state: negative alpha");
  if (act_delay < 1) throw std::invalid_argument("augmented state: beta must be >= 1");
  if (static_cast<std::size_t>(obs_delay + act_delay) > buffer.capacity())
    throw std::invalid_argument("augmented state: alpha+beta=" +
                                std::to_string(obs_delay + act_delay) +
                                " exceeds buffer length K=" + std::to_string(buffer.capacity()));
  if (kappa && (*kappa < 0 || *kappa > act_delay))
    throw std::invalid_argument("augmented state: kappa outside [0, beta]");
}

StateKey state_key(const AugmentedState& x) {
  StateKey key;
  key.fields.reserve(x.buffer.capacity() + 3);
  key.fields.push_back(observation_index(x.obs));
  for (const Action& a : x.buffer.entries()) key.fields.push_back(action_index(a));
  key.fields.push_back(x.obs_delay);
  key.fields.push_back(x.act_delay);
  return key;
}

std::size_t StateKeyHash::operator()(const StateKey& k) const noexcept {
  std::size_t h = 1469598103934665603ULL;
  for (int f : k.fields) {
    h ^= static_cast<std::size_t>(f) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace rdmdp
