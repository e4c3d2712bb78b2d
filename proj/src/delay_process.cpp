#include "rdmdp/delay_process.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rdmdp/errors.hpp"

namespace rdmdp {

namespace {

std::vector<Vector> hazard_rows(const Vector& m, int min_delay) {
  const int max_delay = static_cast<int>(m.size()) - 1;
  const auto n = m.size();
  Vector hazard(n, 1.0);
  double tail = 0.0;
  for (int k = max_delay; k >= min_delay; --k) {
    tail += m[static_cast<std::size_t>(k)];
    hazard[static_cast<std::size_t>(k)] = tail > 0.0 ? m[static_cast<std::size_t>(k)] / tail : 1.0;
  }
  std::vector<Vector> rows(n, Vector(n, 0.0));
  for (int d = 0; d <= max_delay; ++d) {
    Vector& row = rows[static_cast<std::size_t>(d)];
    if (d < min_delay) {
      row[static_cast<std::size_t>(min_delay)] = 1.0;
      continue;
    }
    double survive = 1.0;
    for (int k = min_delay; k <= d; ++k) {
      row[static_cast<std::size_t>(k)] = survive * hazard[static_cast<std::size_t>(k)];
      survive *= 1.0 - hazard[static_cast<std::size_t>(k)];
    }
    if (d < max_delay) row[static_cast<std::size_t>(d + 1)] = survive;
    // Renormalize away the last ulp so rows pass the 1e-12 check exactly.
    double total = 0.0;
    for (double p : row) total += p;
    for (double& p : row) p /= total;
  }
  return rows;
}

}  // namespace

DelayProcess DelayProcess::constant(int value) {
  if (value < 0) throw std::invalid_argument("DelayProcess::constant: negative delay");
  DelayProcess p;
  p.kind_ = DelayKind::constant;
  p.min_delay_ = value;
  p.max_delay_ = value;
  const auto n = static_cast<std::size_t>(value + 1);
  p.rows_.assign(n, Vector(n, 0.0));
  for (Vector& row : p.rows_) row[static_cast<std::size_t>(value)] = 1.0;
  Vector m(n, 0.0);
  m[static_cast<std::size_t>(value)] = 1.0;
  p.marginal_ = m;
  return p;
}

DelayProcess DelayProcess::conditional(std::vector<Vector> rows, int min_delay) {
  if (rows.empty()) throw std::invalid_argument("DelayProcess::conditional: no rows");
  DelayProcess p;
  p.kind_ = DelayKind::conditional_table;
  p.min_delay_ = min_delay;
  p.max_delay_ = static_cast<int>(rows.size()) - 1;
  if (min_delay < 0 || min_delay > p.max_delay_) throw std::invalid_argument("DelayProcess::conditional: bad min_delay");
  p.rows_ = std::move(rows);
  p.validate_rows();
  for (int d = 0; d <= p.max_delay_; ++d)
    for (int k = 0; k < min_delay; ++k)
      if (p.rows_[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)] > 0.0)
        throw std::invalid_argument("DelayProcess::conditional: mass below min_delay");
  return p;
}

DelayProcess DelayProcess::histogram(Vector marginal, int min_delay) {
  if (marginal.empty()) throw std::invalid_argument("DelayProcess::histogram: empty histogram");
  if (min_delay < 0 || min_delay >= static_cast<int>(marginal.size()))
    throw std::invalid_argument("DelayProcess::histogram: support ends below min_delay");
  double total = 0.0;
  for (double v : marginal) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("DelayProcess::histogram: negative mass");
    total += v;
  }
  if (total <= 0.0) throw std::invalid_argument("DelayProcess::histogram: zero total mass");
  for (int k = 0; k < min_delay; ++k) {
    marginal[static_cast<std::size_t>(min_delay)] += marginal[static_cast<std::size_t>(k)];
    marginal[static_cast<std::size_t>(k)] = 0.0;
  }
  for (double& v : marginal) v /= total;
  DelayProcess p;
  p.kind_ = DelayKind::empirical_histogram;
  p.min_delay_ = min_delay;
  p.max_delay_ = static_cast<int>(marginal.size()) - 1;
  p.rows_ = hazard_rows(marginal, min_delay);
  p.marginal_ = std::move(marginal);
  p.validate_rows();
  return p;
}

DelayProcess DelayProcess::uniform(int lo, int hi, int min_delay) {
  if (lo < min_delay || hi < lo) throw std::invalid_argument("DelayProcess::uniform: need min_delay <= lo <= hi");
  Vector m(static_cast<std::size_t>(hi + 1), 0.0);
  for (int d = lo; d <= hi; ++d) m[static_cast<std::size_t>(d)] = 1.0;
  return histogram(std::move(m), min_delay);
}

const Vector& DelayProcess::row(int d) const {
  if (d < 0 || d > max_delay_)
    throw std::invalid_argument("DelayProcess: delay " + std::to_string(d) + " outside [0, " +
                                std::to_string(max_delay_) + "]");
  return rows_[static_cast<std::size_t>(d)];
}

int DelayProcess::sample(int d, Rng& rng) const {
  const Vector& r = row(d);
  for (std::size_t k = 0; k < r.size(); ++k)
    if (r[k] == 1.0) return static_cast<int>(k);
  return static_cast<int>(rng.categorical(r));
}

void DelayProcess::validate_rows() const {
  for (const Vector& row : rows_) {
    if (row.size() != rows_.size()) throw std::invalid_argument("DelayProcess: rows must be square");
    double total = 0.0;
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("DelayProcess: probability outside [0,1]");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("DelayProcess: row does not sum to 1");
  }
}

void DelayProcess::validate_observation() const {
  // Rows that can never be visited from initial() are irrelevant.
  for (int d : reachable())
    for (int k = d + 2; k <= max_delay_; ++k)
      if (rows_[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)] > 0.0)
        throw std::invalid_argument("DelayProcess: observation delay can grow by at most one (row " +
                                    std::to_string(d) + " reaches " + std::to_string(k) + ")");
}

std::vector<int> DelayProcess::reachable() const {
  std::set<int> seen{initial()};
  std::vector<int> frontier{initial()};
  while (!frontier.empty()) {
    const int d = frontier.back();
    frontier.pop_back();
    const Vector& r = rows_[static_cast<std::size_t>(d)];
    for (std::size_t k = 0; k < r.size(); ++k)
      if (r[k] > 0.0 && seen.insert(static_cast<int>(k)).second) frontier.push_back(static_cast<int>(k));
  }
  return {seen.begin(), seen.end()};
}

bool DelayProcess::is_dirac() const {
  for (const Vector& row : rows_) {
    bool one = false;
    for (double p : row) one = one || p == 1.0;
    if (!one) return false;
  }
  return true;
}

DelayProcess parse_delay_histogram(std::istream& in, int max_delay, int min_delay) {
  if (max_delay < min_delay || min_delay < 0) throw std::invalid_argument("load_delay_histogram: bad delay bounds");
  Vector m(static_cast<std::size_t>(max_delay + 1), 0.0);
  std::string line;
  int line_no = 0;
  int data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    if (data_rows == 0 && line.substr(first) == "delay_ticks,count") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected 'delay_ticks,count'", line_no);
    long long delay = 0, count = 0;
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      delay = std::stoll(a, &used);
      if (a.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(a);
      count = std::stoll(b, &used);
      if (b.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(b);
    } catch (const std::exception&) {
      throw ParseError("malformed row '" + line + "'", line_no);
    }
    if (delay < 0) throw ParseError("negative delay", line_no);
    if (count < 0) throw ParseError("negative count", line_no);
    const long long clipped = std::min<long long>(std::max<long long>(delay, min_delay), max_delay);
    m[static_cast<std::size_t>(clipped)] += static_cast<double>(count);
    ++data_rows;
  }
  if (data_rows == 0) throw ParseError("empty delay histogram", line_no);
  double total = 0.0;
  int support = 0, last = 0;
  for (std::size_t d = 0; d < m.size(); ++d) {
    total += m[d];
    if (m[d] > 0.0) {
      ++support;
      last = static_cast<int>(d);
    }
  }
  if (total <= 0.0) throw ParseError("delay histogram has zero total count", line_no);
  if (support == 1) return DelayProcess::constant(last);
  return DelayProcess::histogram(std::move(m), min_delay);
}

DelayProcess load_delay_histogram(const std::string& path, int max_delay, int min_delay) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return parse_delay_histogram(in, max_delay, min_delay);
}

}  // namespace rdmdp
