#pragma once

#include <cstddef>
#include <vector>

#include "rdmdp/resampling.hpp"

namespace rdmdp {

/// One visited augmented state. The action sent from it is the next entry's
/// buffer[1], so it is not stored separately.
struct ReplayEntry {
  AugmentedState state;
  double reward = 0.0;  // reward received on the transition into `state`
  bool terminal = false;
  bool episode_start = false;
};

/// Ring buffer of consecutive augmented states; episodes are delimited by
/// `episode_start` markers. The oldest entries are evicted at capacity.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void start_episode(AugmentedState x0);
  /// Throws ContractViolation when no episode is open.
  void append(AugmentedState x, double reward, bool terminal);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return entries_.size(); }
  /// Logical index 0 is the oldest entry.
  const ReplayEntry& at(std::size_t i) const;
  /// Starts that have at least one successor in the same episode.
  std::size_t valid_starts() const { return valid_; }
  bool is_valid_start(std::size_t i) const;

  /// Fragment from logical index i: the longest run of successors satisfying
  /// the delay condition, capped at K and at max_n (0 = no extra cap).
  ValidSubTrajectory fragment(std::size_t i, std::size_t max_n = 0) const;

 private:
  std::size_t physical(std::size_t i) const { return (head_ + i) % entries_.size(); }
  void push(ReplayEntry e);

  std::vector<ReplayEntry> entries_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::size_t valid_ = 0;
  bool open_ = false;
};

/// Uniform start among valid starts, then the maximal valid fragment from it.
/// Throws EmptyStoreError when no start has a successor.
ValidSubTrajectory sample_valid_fragment(const ReplayMemory& memory, Rng& rng, std::size_t max_n = 0);

}  // namespace rdmdp
