#pragma once

#include <string>
#include <vector>

#include "rdmdp/types.hpp"

namespace rdmdp {

struct TrajectoryRecord {
  AugmentedState state;
  double reward = 0.0;  // reward received on the transition into `state`
  bool terminal = false;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

/// Start state followed by the records observed from it. Append-only.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(AugmentedState start, std::string behavior_policy_id = "")
      : start_(std::move(start)), behavior_policy_id_(std::move(behavior_policy_id)) {}

  /// Throws ContractViolation when the last record is terminal.
  void append(TrajectoryRecord record);

  const AugmentedState& start() const { return start_; }
  const std::vector<TrajectoryRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const std::string& behavior_policy_id() const { return behavior_policy_id_; }
  /// State i of the sequence start, records[0].state, records[1].state, ...
  const AugmentedState& state_at(std::size_t i) const;

 private:
  AugmentedState start_;
  std::vector<TrajectoryRecord> records_;
  std::string behavior_policy_id_;
};

}  // namespace rdmdp
