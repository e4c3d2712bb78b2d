#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rdmdp/config.hpp"
#include "rdmdp/rng.hpp"

namespace rdmdp {

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double half_width() const { return 0.5 * (hi - lo); }
};

/// Percentile bootstrap of the mean: `resamples` draws with replacement, then
/// the (1 - level) / 2 and (1 + level) / 2 quantiles of the resampled means.
Interval bootstrap_mean_interval(const std::vector<double>& xs, Rng& rng, int resamples = 1000, double level = 0.9);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
};

/// Welch's unequal-variance t-test of mean(a) == mean(b).
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct BenchCell {
  std::string env;
  std::string delay;
  std::string agent;
  std::vector<double> seed_means;  // final-window mean return per seed
  Interval interval;
};

struct BenchJob {
  RunConfig config;  // single cell, single seed
  std::string env, delay, agent;
  std::size_t cell = 0;
};

/// Expands the [bench] matrix: every (delay cell, agent) pair times seeds
/// config.seed, config.seed + 1, ...
std::vector<BenchJob> expand_bench_jobs(const RunConfig& config);

/// Mean eval_return over the last `window` rows.
double final_window_mean(const TrainResult& result, int window);

/// Runs every job (OpenMP worker pool unless parallel = false), then writes
/// `env,delay,agent,mean,lo90,hi90` once. Per-job metrics go to
/// metrics_dir/<env>_<delay>_<agent>_seed<k>.csv when metrics_dir is set.
/// Results do not depend on the number of threads.
std::vector<BenchCell> run_benchmark_suite(const RunConfig& config, std::ostream* summary,
                                           const std::string& metrics_dir = "", bool parallel = true);

void write_bench_summary(std::ostream& out, const std::vector<BenchCell>& cells);

}  // namespace rdmdp
