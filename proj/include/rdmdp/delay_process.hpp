#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdmdp/rng.hpp"
#include "rdmdp/types.hpp"

namespace rdmdp {

enum class DelayKind { constant, conditional_table, empirical_histogram };

/// Markov process over integer delays d in [min_delay, max_delay], stored as
/// conditional rows p(d' | d). Observation delays use min_delay = 0, action
/// delays min_delay = 1.
///
/// Histogram processes turn a marginal latency pmf m into rows through the
/// hazard h(k) = m(k) / sum_{j >= k} m(j): the delay either resets to some
/// k <= d (the freshest message arriving) or grows by exactly one.
class DelayProcess {
 public:
  DelayProcess() = default;

  static DelayProcess constant(int value);
  /// rows[d][d'] for d, d' in [0, rows.size()).
  static DelayProcess conditional(std::vector<Vector> rows, int min_delay);
  /// marginal[d] = mass of delay d; mass below min_delay is folded up into min_delay.
  static DelayProcess histogram(Vector marginal, int min_delay);
  /// Uniform marginal on [lo, hi], turned into rows as for histograms.
  static DelayProcess uniform(int lo, int hi, int min_delay);

  DelayKind kind() const { return kind_; }
  int min_delay() const { return min_delay_; }
  int max_delay() const { return max_delay_; }
  /// Delay used for the first state of an episode.
  int initial() const { return max_delay_; }
  const Vector& row(int d) const;
  /// Marginal latency pmf (constant and histogram kinds only).
  const std::optional<Vector>& marginal() const { return marginal_; }

  /// Draws d' ~ p(.|d). Dirac rows consume no randomness.
  int sample(int d, Rng& rng) const;

  /// Throws std::invalid_argument unless p(d'|d) = 0 whenever d' > d + 1, for
  /// every d reachable from initial().
  void validate_observation() const;
  /// Delays reachable from initial() under the rows (sorted).
  std::vector<int> reachable() const;
  bool is_dirac() const;

 private:
  void validate_rows() const;

  DelayKind kind_ = DelayKind::constant;
  int min_delay_ = 0;
  int max_delay_ = 0;
  std::vector<Vector> rows_;
  std::optional<Vector> marginal_;
};

/// CSV with rows `delay_ticks,count` (integers), '#' comments and an optional
/// `delay_ticks,count` header. Delays above max_delay are folded into max_delay
/// and delays below min_delay into min_delay. A histogram with a single
/// supported delay c comes back as the constant process c.
/// Throws ParseError (with line number) for malformed rows, negative counts or
/// an empty file.
DelayProcess load_delay_histogram(const std::string& path, int max_delay, int min_delay);
DelayProcess parse_delay_histogram(std::istream& in, int max_delay, int min_delay);

}  // namespace rdmdp
