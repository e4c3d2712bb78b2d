#pragma once

#include <vector>

#include "rdmdp/nn.hpp"
#include "rdmdp/types.hpp"

namespace rdmdp {

/// Flattens augmented states into network inputs laid out as
///   [obs | u[1] .. u[K] | one-hot alpha | one-hot beta | one-hot kappa]
/// Discrete actions are one-hot encoded, continuous ones copied. Blocks can be
/// switched off (the naive baseline keeps only the observation).
struct Encoder {
  std::size_t obs_dim = 0;
  ActionSpace action_space;
  int buffer_len = 1;  // K
  int max_alpha = 0;
  int max_beta = 1;
  bool use_buffer = true;
  bool use_delays = true;
  bool use_kappa = false;

  /// Width of one encoded action (d, or the number of discrete actions).
  std::size_t action_width() const;
  std::size_t width() const;
  std::size_t buffer_offset() const { return obs_dim; }
  std::size_t delay_offset() const;

  void encode_into(const AugmentedState& x, double* out) const;
  nn::Matrix encode(const std::vector<const AugmentedState*>& batch) const;
  nn::Matrix encode(const AugmentedState& x) const;
};

}  // namespace rdmdp
