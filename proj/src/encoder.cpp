#include "rdmdp/encoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace rdmdp {

std::size_t Encoder::action_width() const { return action_space.size; }

std::size_t Encoder::delay_offset() const {
  return obs_dim + (use_buffer ? static_cast<std::size_t>(buffer_len) * action_width() : 0);
}

std::size_t Encoder::width() const {
  std::size_t w = delay_offset();
  if (use_delays) w += static_cast<std::size_t>(max_alpha + 1) + static_cast<std::size_t>(max_beta);
  if (use_kappa) w += static_cast<std::size_t>(max_beta + 1);
  return w;
}

void Encoder::encode_into(const AugmentedState& x, double* out) const {
  if (x.obs.size() != obs_dim) throw std::invalid_argument("Encoder: observation width mismatch");
  std::fill(out, out + width(), 0.0);
  std::copy(x.obs.begin(), x.obs.end(), out);
  const std::size_t aw = action_width();
  if (use_buffer) {
    if (x.buffer.capacity() != static_cast<std::size_t>(buffer_len))
      throw std::invalid_argument("Encoder: buffer length mismatch");
    for (int i = 1; i <= buffer_len; ++i) {
      const Action& a = x.buffer[static_cast<std::size_t>(i)];
      double* slot = out + obs_dim + static_cast<std::size_t>(i - 1) * aw;
      if (action_space.kind == ActionKind::discrete) {
        const int k = action_index(a);
        if (k < 0 || static_cast<std::size_t>(k) >= aw) throw std::invalid_argument("Encoder: action out of range");
        slot[k] = 1.0;
      } else {
        if (a.size() != aw) throw std::invalid_argument("Encoder: action width mismatch");
        std::copy(a.begin(), a.end(), slot);
      }
    }
  }
  std::size_t at = delay_offset();
  if (use_delays) {
    if (x.obs_delay < 0 || x.obs_delay > max_alpha || x.act_delay < 1 || x.act_delay > max_beta)
      throw std::invalid_argument("Encoder: delay outside the encoded range");
    out[at + static_cast<std::size_t>(x.obs_delay)] = 1.0;
    at += static_cast<std::size_t>(max_alpha + 1);
    out[at + static_cast<std::size_t>(x.act_delay - 1)] = 1.0;
    at += static_cast<std::size_t>(max_beta);
  }
  if (use_kappa && x.kappa) {
    if (*x.kappa < 0 || *x.kappa > max_beta) throw std::invalid_argument("Encoder: kappa outside the encoded range");
    out[at + static_cast<std::size_t>(*x.kappa)] = 1.0;
  }
}

nn::Matrix Encoder::encode(const std::vector<const AugmentedState*>& batch) const {
  // Row-major scratch so each state fills one contiguous row.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(width()));
  for (std::size_t i = 0; i < batch.size(); ++i) encode_into(*batch[i], rows.row(static_cast<Eigen::Index>(i)).data());
  return rows;
}

nn::Matrix Encoder::encode(const AugmentedState& x) const { return encode(std::vector<const AugmentedState*>{&x}); }

}  // namespace rdmdp
