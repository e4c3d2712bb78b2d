#include "rdmdp/nn.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rdmdp/errors.hpp"

namespace rdmdp::nn {

namespace {

void require_same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw std::invalid_argument("nn: operands live on different tapes");
}

void require_same_shape(Var a, Var b, const char* op) {
  require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string("nn::") + op + ": shape mismatch");
}

template <class F, class D>
Var unary(Var a, F&& f, D&& dfdx) {
  Tape& t = *a.tape();
  Matrix out = a.value().unaryExpr(f);
  const int ia = a.id();
  return t.push(std::move(out), t.needs_grad(ia), [ia, dfdx](Tape& tp, const Matrix& g) {
    const Matrix& x = tp.value(ia);
    tp.accumulate(ia, g.cwiseProduct(x.unaryExpr(dfdx)));
  });
}

double softplus_scalar(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw std::invalid_argument("nn: use of an empty Var");
  return tape_->value(id_);
}

double Var::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("nn: item() on a non-scalar node");
  return v(0, 0);
}

Matrix Var::grad() const {
  if (tape_ == nullptr) throw std::invalid_argument("nn: use of an empty Var");
  return tape_->grad_of(id_);
}

Var Tape::push(Matrix value, bool needs_grad, BackwardFn fn) {
  if (done_) throw ContractViolation("nn: tape already consumed by backward");
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

Var Tape::parameter(Parameter& p) {
  Var v = push(p.value, true, nullptr);
  nodes_.back().param = &p;
  return v;
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

const Matrix& Tape::grad_of(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.has_grad) {
    // Materialize lazily so callers always see a correctly shaped zero.
    auto& mut = const_cast<Node&>(n);
    mut.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    mut.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("nn: loss belongs to another tape");
  if (done_) throw ContractViolation("nn: backward called twice on the same tape");
  const Matrix& lv = loss.value();
  if (lv.rows() != 1 || lv.cols() != 1) throw std::invalid_argument("nn: backward needs a scalar (1x1) loss");
  done_ = true;
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad) continue;
    if (n.param != nullptr) {
      if (n.param->grad.rows() != n.value.rows() || n.param->grad.cols() != n.value.cols())
        n.param->grad = Matrix::Zero(n.value.rows(), n.value.cols());
      n.param->grad += n.grad;
    }
    if (n.backward) n.backward(*this, n.grad);
  }
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("nn::matmul: inner dimensions differ");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() * b.value(), t.needs_grad(ia) || t.needs_grad(ib), [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.needs_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.needs_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), t.needs_grad(ia) || t.needs_grad(ib), [ia, ib](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), t.needs_grad(ia) || t.needs_grad(ib), [ia, ib](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, g);
    if (tp.needs_grad(ib)) tp.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& tp, const Matrix& g) {
                  if (tp.needs_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
                  if (tp.needs_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
                });
}

Var add_row(Var a, Var row) {
  require_same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("nn::add_row: shape mismatch");
  Tape& t = *a.tape();
  const int ia = a.id(), ir = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.push(std::move(out), t.needs_grad(ia) || t.needs_grad(ir), [ia, ir](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, g);
    if (tp.needs_grad(ir)) tp.accumulate(ir, g.colwise().sum());
  });
}

Var mul_col(Var a, Var col) {
  require_same_tape(a, col);
  if (col.cols() != 1 || col.rows() != a.rows()) throw std::invalid_argument("nn::mul_col: shape mismatch");
  Tape& t = *a.tape();
  const int ia = a.id(), ic = col.id();
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return t.push(std::move(out), t.needs_grad(ia) || t.needs_grad(ic), [ia, ic](Tape& tp, const Matrix& g) {
    if (tp.needs_grad(ia)) {
      Matrix ga = g.array().colwise() * tp.value(ic).col(0).array();
      tp.accumulate(ia, ga);
    }
    if (tp.needs_grad(ic)) tp.accumulate(ic, g.cwiseProduct(tp.value(ia)).rowwise().sum());
  });
}

Var scale(Var a, double c) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value() * c, t.needs_grad(ia), [ia, c](Tape& tp, const Matrix& g) { tp.accumulate(ia, g * c); });
}

Var add_scalar(Var a, double c) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().array() + c;
  return t.push(std::move(out), t.needs_grad(ia), [ia](Tape& tp, const Matrix& g) { tp.accumulate(ia, g); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double x) {
        const double y = std::tanh(x);
        return 1.0 - y * y;
      });
}

Var silu(Var a) {
  return unary(
      a, [](double x) { return x * sigmoid_scalar(x); },
      [](double x) {
        const double s = sigmoid_scalar(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softplus(Var a) {
  return unary(a, [](double x) { return softplus_scalar(x); }, [](double x) { return sigmoid_scalar(x); });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
      [lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var minimum(Var a, Var b) {
  require_same_shape(a, b, "minimum");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseMin(b.value()), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& tp, const Matrix& g) {
                  const Matrix& va = tp.value(ia);
                  const Matrix& vb = tp.value(ib);
                  Matrix pick_a = (va.array() <= vb.array()).cast<double>().matrix();
                  if (tp.needs_grad(ia)) tp.accumulate(ia, g.cwiseProduct(pick_a));
                  if (tp.needs_grad(ib)) {
                    Matrix pick_b = Matrix::Ones(pick_a.rows(), pick_a.cols()) - pick_a;
                    tp.accumulate(ib, g.cwiseProduct(pick_b));
                  }
                });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), t.needs_grad(ia), [ia, r, c](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.rows() * a.cols());
  if (n == 0.0) throw std::invalid_argument("nn::mean: empty input");
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  const Eigen::Index c = a.cols();
  Matrix out = a.value().rowwise().sum();
  return t.push(std::move(out), t.needs_grad(ia), [ia, c](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, g.replicate(1, c));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("nn::concat_cols: no inputs");
  Tape& t = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool needs = false;
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::invalid_argument("nn: operands live on different tapes");
    if (p.rows() != rows) throw std::invalid_argument("nn::concat_cols: row counts differ");
    cols += p.cols();
    needs = needs || t.needs_grad(p.id());
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return t.push(std::move(out), needs, [ids, widths](Tape& tp, const Matrix& g) {
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (tp.needs_grad(ids[i])) tp.accumulate(ids[i], g.middleCols(off, widths[i]));
      off += widths[i];
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::invalid_argument("nn::slice_cols: out of range");
  Tape& t = *a.tape();
  const int ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return t.push(a.value().middleCols(start, count), t.needs_grad(ia), [ia, r, c, start, count](Tape& tp, const Matrix& g) {
    Matrix full = Matrix::Zero(r, c);
    full.middleCols(start, count) = g;
    tp.accumulate(ia, full);
  });
}

Var detach(Var a) { return a.tape()->constant(a.value()); }

Activation parse_activation(const std::string& name) {
  if (name == "silu") return Activation::silu;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::silu: return "silu";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "silu";
}

Mlp::Mlp(std::vector<int> sizes, Activation act, Rng& rng) : sizes_(std::move(sizes)), act_(act) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : sizes_)
    if (s <= 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    Matrix w(sizes_[l], sizes_[l + 1]);
    Matrix b(1, sizes_[l + 1]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-bound, bound);
    weights_.emplace_back(std::move(w));
    biases_.emplace_back(std::move(b));
  }
}

Var Mlp::forward(Tape& tape, Var x, bool frozen) {
  if (x.cols() != sizes_.front()) throw std::invalid_argument("Mlp::forward: input width mismatch");
  Var h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Var w = frozen ? tape.constant(weights_[l].value) : tape.parameter(weights_[l]);
    Var b = frozen ? tape.constant(biases_[l].value) : tape.parameter(biases_[l]);
    h = add_row(matmul(h, w), b);
    if (l + 1 < weights_.size()) {
      switch (act_) {
        case Activation::silu: h = silu(h); break;
        case Activation::relu: h = relu(h); break;
        case Activation::tanh: h = tanh(h); break;
      }
    }
  }
  return h;
}

Matrix Mlp::predict(const Matrix& x) const {
  if (x.cols() != sizes_.front()) throw std::invalid_argument("Mlp::predict: input width mismatch");
  Matrix h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = h * weights_[l].value;
    z.rowwise() += biases_[l].value.row(0);
    if (l + 1 < weights_.size()) {
      switch (act_) {
        case Activation::silu: z = z.unaryExpr([](double v) { return v * sigmoid_scalar(v); }); break;
        case Activation::relu: z = z.cwiseMax(0.0); break;
        case Activation::tanh: z = z.array().tanh().matrix(); break;
      }
    }
    h = std::move(z);
  }
  return h;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
    n += static_cast<std::size_t>(sizes_[l] + 1) * static_cast<std::size_t>(sizes_[l + 1]);
  return n;
}

void Mlp::zero_grad() { nn::zero_grad(parameters()); }

namespace {

void write_le_double(std::ostream& out, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(bytes, 8);
}

double read_le_double(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ParseError("checkpoint truncated", 0);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  double v = 0.0;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_le_double(out, m(r, c));
}

void read_matrix(std::istream& in, Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_le_double(in);
}

}  // namespace

void Mlp::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << "mlp " << activation_name(act_);
  for (int s : sizes_) out << ' ' << s;
  out << '\n';
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    write_matrix(out, weights_[l].value);
    write_matrix(out, biases_[l].value);
  }
}

Mlp Mlp::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'", 0);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string tag, act;
  hs >> tag >> act;
  if (tag != "mlp") throw ParseError("checkpoint header must start with 'mlp'", 1);
  std::vector<int> sizes;
  int s = 0;
  while (hs >> s) sizes.push_back(s);
  Rng dummy(0);
  Mlp m(sizes, parse_activation(act), dummy);
  for (std::size_t l = 0; l < m.weights_.size(); ++l) {
    read_matrix(in, m.weights_[l].value);
    read_matrix(in, m.biases_[l].value);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("checkpoint has trailing bytes", 0);
  return m;
}

void zero_grad(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->grad = Matrix::Zero(p->value.rows(), p->value.cols());
}

void adam_step(AdamState& state, const std::vector<Parameter*>& params) {
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: parameter list changed");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) continue;
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * p.grad;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * p.grad.cwiseProduct(p.grad);
    const Matrix mhat = state.m[i] / bc1;
    const Matrix vhat = state.v[i] / bc2;
    p.value.array() -= state.lr * mhat.array() / (vhat.array().sqrt() + state.eps);
  }
}

void polyak_update(const std::vector<Parameter*>& target, const std::vector<const Parameter*>& online, double tau) {
  if (target.size() != online.size()) throw std::invalid_argument("polyak_update: parameter lists differ");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak_update: tau outside [0, 1]");
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (tau == 1.0) {
      target[i]->value = online[i]->value;
    } else if (tau != 0.0) {
      target[i]->value = tau * online[i]->value + (1.0 - tau) * target[i]->value;
    }
  }
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
  polyak_update(target.parameters(), online.parameters(), tau);
}

double log1m_tanh_sq(double u) { return 2.0 * (std::numbers::ln2 - u - softplus_scalar(-2.0 * u)); }

SquashedSample reparameterized_gaussian_sample(Tape& tape, Var mean, Var log_std, const Matrix& eps,
                                               double log_std_min, double log_std_max) {
  if (eps.rows() != mean.rows() || eps.cols() != mean.cols())
    throw std::invalid_argument("reparameterized_gaussian_sample: noise shape mismatch");
  Var ls = clamp(log_std, log_std_min, log_std_max);
  Var noise = tape.constant(eps);
  Var u = add(mean, mul(exp(ls), noise));
  Var action = tanh(u);
  // log N(u; mean, std) at u = mean + std * eps is -eps^2/2 - log std - log(2 pi)/2.
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Matrix gauss_const = (-0.5 * eps.array().square() - half_log_2pi).matrix();
  Var gauss = sub(tape.constant(std::move(gauss_const)), ls);
  // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
  Var correction = scale(add_scalar(sub(neg(u), softplus(scale(u, -2.0))), std::numbers::ln2), 2.0);
  Var log_prob = row_sum(sub(gauss, correction));
  return SquashedSample{action, log_prob, u};
}

double squashed_gaussian_log_prob(const std::vector<double>& mean, const std::vector<double>& log_std,
                                  const std::vector<double>& action, double log_std_min, double log_std_max) {
  if (mean.size() != log_std.size() || mean.size() != action.size())
    throw std::invalid_argument("squashed_gaussian_log_prob: size mismatch");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double a = action[j];
    if (!(a > -1.0 && a < 1.0)) return -std::numeric_limits<double>::infinity();
    const double u = 0.5 * (std::log1p(a) - std::log1p(-a));
    const double ls = std::min(std::max(log_std[j], log_std_min), log_std_max);
    const double z = (u - mean[j]) * std::exp(-ls);
    lp += -0.5 * z * z - ls - half_log_2pi - log1m_tanh_sq(u);
  }
  return lp;
}

}  // namespace rdmdp::nn
