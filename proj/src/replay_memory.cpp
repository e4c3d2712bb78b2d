#include "rdmdp/replay_memory.hpp"

#include <stdexcept>

#include "rdmdp/errors.hpp"

namespace rdmdp {

ReplayMemory::ReplayMemory(std::size_t capacity) {
  if (capacity < 2) throw std::invalid_argument("ReplayMemory: capacity must be at least 2");
  entries_.resize(capacity);
}

const ReplayEntry& ReplayMemory::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayMemory::at");
  return entries_[physical(i)];
}

bool ReplayMemory::is_valid_start(std::size_t i) const {
  if (i + 1 >= size_) return false;
  return !at(i).terminal && !at(i + 1).episode_start;
}

void ReplayMemory::push(ReplayEntry e) {
  if (size_ == entries_.size()) {
    if (is_valid_start(0)) --valid_;
    head_ = (head_ + 1) % entries_.size();
    --size_;
  }
  const bool links = size_ > 0 && !e.episode_start && !at(size_ - 1).terminal;
  entries_[physical(size_)] = std::move(e);
  ++size_;
  if (links) ++valid_;
}

void ReplayMemory::start_episode(AugmentedState x0) {
  push(ReplayEntry{std::move(x0), 0.0, false, true});
  open_ = true;
}

void ReplayMemory::append(AugmentedState x, double reward, bool terminal) {
  if (!open_) throw ContractViolation("ReplayMemory::append: no open episode");
  push(ReplayEntry{std::move(x), reward, terminal, false});
  if (terminal) open_ = false;
}

ValidSubTrajectory ReplayMemory::fragment(std::size_t i, std::size_t max_n) const {
  const ReplayEntry& first = at(i);
  ValidSubTrajectory f{first.state, {}};
  std::size_t cap = first.state.buffer.capacity();
  if (max_n > 0 && max_n < cap) cap = max_n;
  if (first.terminal) return f;
  for (std::size_t t = 1; t <= cap && i + t < size_; ++t) {
    const ReplayEntry& e = at(i + t);
    if (e.episode_start) break;
    if (static_cast<std::size_t>(e.state.obs_delay + e.state.act_delay) < t) break;
    f.steps.push_back(TrajectoryRecord{e.state, e.reward, e.terminal});
    if (e.terminal) break;
  }
  return f;
}

ValidSubTrajectory sample_valid_fragment(const ReplayMemory& memory, Rng& rng, std::size_t max_n) {
  if (memory.valid_starts() == 0) throw EmptyStoreError("replay memory holds no start with a successor");
  for (;;) {
    const std::size_t i = rng.uniform_index(memory.size() - 1);
    if (memory.is_valid_start(i)) return memory.fragment(i, max_n);
  }
}

}  // namespace rdmdp
