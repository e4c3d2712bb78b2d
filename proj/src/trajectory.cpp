#include "rdmdp/trajectory.hpp"

#include <stdexcept>

#include "rdmdp/errors.hpp"

namespace rdmdp {

void Trajectory::append(TrajectoryRecord record) {
  if (!records_.empty() && records_.back().terminal)
    throw ContractViolation("Trajectory::append: no record may follow a terminal record");
  records_.push_back(std::move(record));
}

const AugmentedState& Trajectory::state_at(std::size_t i) const {
  if (i == 0) return start_;
  if (i > records_.size()) throw std::out_of_range("Trajectory::state_at: index past the end");
  return records_[i - 1].state;
}

}  // namespace rdmdp
