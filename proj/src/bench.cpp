#include "rdmdp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include <boost/math/distributions/students_t.hpp>

#include "rdmdp/csv.hpp"
#include "rdmdp/errors.hpp"

namespace rdmdp {

namespace {

double mean_of(const std::vector<double>& xs) { return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size(); }

double variance_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, sorted.size() - 1);
  return sorted[i] + (pos - static_cast<double>(i)) * (sorted[j] - sorted[i]);
}

std::string file_safe(std::string s) {
  for (char& c : s)
    if (c == '(' || c == ')' || c == ';' || c == ' ') c = '_';
  return s;
}

}  // namespace

Interval bootstrap_mean_interval(const std::vector<double>& xs, Rng& rng, int resamples, double level) {
  if (xs.empty()) throw std::invalid_argument("bootstrap of an empty sample");
  if (resamples < 1 || !(level > 0.0 && level < 1.0)) throw std::invalid_argument("bad bootstrap settings");
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (double& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) s += xs[rng.uniform_index(xs.size())];
    m = s / static_cast<double>(xs.size());
  }
  std::sort(means.begin(), means.end());
  return Interval{mean_of(xs), quantile(means, 0.5 * (1.0 - level)), quantile(means, 0.5 * (1.0 + level))};
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch test needs two samples of size >= 2");
  const double va = variance_of(a) / a.size(), vb = variance_of(b) / b.size();
  const double se2 = va + vb;
  WelchResult r;
  if (se2 == 0.0) {
    r.t = mean_of(a) == mean_of(b) ? 0.0 : std::copysign(INFINITY, mean_of(a) - mean_of(b));
    r.df = static_cast<double>(a.size() + b.size() - 2);
    r.p_two_sided = r.t == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = (mean_of(a) - mean_of(b)) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (a.size() - 1) + vb * vb / (b.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

std::vector<BenchJob> expand_bench_jobs(const RunConfig& config) {
  std::vector<DelayConfig> cells;
  if (config.bench.delays.empty()) {
    cells.push_back(config.delays);
  } else {
    for (const auto& [a, b] : config.bench.delays) {
      DelayConfig d;
      d.alpha = a;
      d.beta = b;
      cells.push_back(d);
    }
  }
  std::vector<BenchJob> jobs;
  std::size_t cell = 0;
  for (const DelayConfig& d : cells) {
    for (const std::string& agent : config.bench.agents) {
      for (int s = 0; s < config.bench.seeds; ++s) {
        BenchJob job;
        job.config = config;
        job.config.delays = d;
        job.config.agent.kind = parse_agent_kind(agent);
        if (job.config.agent.kind == AgentKind::rtac) job.config.agent = rtac_mode(job.config.agent);
        job.config.seed = config.seed + static_cast<std::uint64_t>(s);
        job.env = env_label(config.env);
        job.delay = delay_label(d);
        job.agent = agent;
        job.cell = cell;
        jobs.push_back(std::move(job));
      }
      ++cell;
    }
  }
  return jobs;
}

double final_window_mean(const TrainResult& result, int window) {
  if (result.rows.empty()) throw std::invalid_argument("no evaluation rows");
  const std::size_t w = std::min(result.rows.size(), static_cast<std::size_t>(std::max(window, 1)));
  double s = 0.0;
  for (std::size_t i = result.rows.size() - w; i < result.rows.size(); ++i) s += result.rows[i].eval_return;
  return s / static_cast<double>(w);
}

std::vector<BenchCell> run_benchmark_suite(const RunConfig& config, std::ostream* summary,
                                           const std::string& metrics_dir, bool parallel) {
  const std::vector<BenchJob> jobs = expand_bench_jobs(config);
  // Configuration problems surface before any work starts.
  for (const BenchJob& job : jobs) {
    job.config.agent.validate();
    if (job.config.agent.kind == AgentKind::rtac &&
        !(job.config.delays.kind == DelayModel::constant && job.config.delays.alpha == 0 && job.config.delays.beta == 1))
      throw ConfigError("bench: rtac needs the delay cell 0:1, got " + job.delay);
  }
  if (!metrics_dir.empty()) std::filesystem::create_directories(metrics_dir);

  std::vector<double> means(jobs.size(), 0.0);
  std::vector<std::exception_ptr> errors(jobs.size());
  const long n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (long i = 0; i < n; ++i) {
    const BenchJob& job = jobs[static_cast<std::size_t>(i)];
    try {
      const auto env = make_environment(job.config.env);
      const ChannelConfig channel = make_channel(job.config.delays, job.config.base_dir);
      std::ofstream file;
      if (!metrics_dir.empty()) {
        file.open(std::filesystem::path(metrics_dir) / (file_safe(job.env + "_" + job.delay + "_" + job.agent) + "_seed" +
                                                        std::to_string(job.config.seed) + ".csv"));
      }
      const TrainResult r =
          train(*env, channel, job.config.agent, make_train_options(job.config), file.is_open() ? &file : nullptr);
      means[static_cast<std::size_t>(i)] = final_window_mean(r, config.bench.window);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<BenchCell> cells;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (cells.size() <= jobs[i].cell) cells.push_back(BenchCell{jobs[i].env, jobs[i].delay, jobs[i].agent, {}, {}});
    cells[jobs[i].cell].seed_means.push_back(means[i]);
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    Rng rng(config.seed * 1000003ULL + c);
    cells[c].interval = bootstrap_mean_interval(cells[c].seed_means, rng);
  }
  if (summary != nullptr) write_bench_summary(*summary, cells);
  return cells;
}

void write_bench_summary(std::ostream& out, const std::vector<BenchCell>& cells) {
  out << "env,delay,agent,mean,lo90,hi90\n";
  for (const BenchCell& c : cells)
    out << c.env << ',' << c.delay << ',' << c.agent << ',' << format_double(c.interval.mean) << ','
        << format_double(c.interval.lo) << ',' << format_double(c.interval.hi) << '\n';
  out.flush();
}

}  // namespace rdmdp
