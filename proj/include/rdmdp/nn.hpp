#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "rdmdp/rng.hpp"

namespace rdmdp::nn {

/// Batch-major dense matrix: one row per sample, one column per feature.
using Matrix = Eigen::MatrixXd;

struct Parameter {
  Matrix value;
  Matrix grad;

  explicit Parameter(Matrix v = Matrix()) : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Scalar value of a 1x1 node.
  double item() const;
  /// Gradient after Tape::backward (zero matrix if the node did not need one).
  Matrix grad() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so walking them
/// backwards is a reverse topological order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var scalar(double v);
  /// Leaf bound to a parameter; backward adds into parameter.grad.
  Var parameter(Parameter& p);

  /// Runs the backward pass from a 1x1 loss. Throws std::invalid_argument for a
  /// non-scalar loss and ContractViolation when called twice on the same tape.
  void backward(Var loss);
  bool backward_done() const { return done_; }
  std::size_t size() const { return nodes_.size(); }

  // Internal interface used by the op implementations.
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;
  Var push(Matrix value, bool needs_grad, BackwardFn fn);
  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  /// Adds g into the gradient accumulator of node id (no-op for constants).
  void accumulate(int id, const Matrix& g);
  const Matrix& grad_of(int id) const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool done_ = false;
};

// Elementwise and structural ops. Shapes must agree exactly unless noted.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// a (n x m) plus a 1 x m row broadcast over all rows.
Var add_row(Var a, Var row);
/// a (n x m) times an n x 1 column broadcast over all columns.
Var mul_col(Var a, Var col);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var neg(Var a);
Var square(Var a);
Var exp(Var a);
Var tanh(Var a);
Var silu(Var a);
Var relu(Var a);
Var softplus(Var a);
/// Gradient passes only where lo <= a <= hi.
Var clamp(Var a, double lo, double hi);
/// Elementwise minimum; ties send the gradient to the first argument.
Var minimum(Var a, Var b);
Var sum(Var a);
Var mean(Var a);
/// Per-row sum, n x m -> n x 1.
Var row_sum(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
/// Value copy with no gradient path back to a.
Var detach(Var a);

enum class Activation { silu, relu, tanh };
Activation parse_activation(const std::string& name);
std::string activation_name(Activation a);

/// Fully connected network with the activation on hidden layers and a linear
/// output layer.
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {in, hidden..., out}. Weights and biases start U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::vector<int> sizes, Activation act, Rng& rng);

  /// Forward on a tape. With frozen = true the parameters enter as constants, so
  /// gradients reach the input but never the weights.
  Var forward(Tape& tape, Var x, bool frozen = false);
  Matrix predict(const Matrix& x) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return act_; }
  void zero_grad();

  /// Text header "mlp <act> s0 s1 ...\n" then every weight and bias as
  /// little-endian float64 in layer order (weights row-major, then bias).
  void save(const std::string& path) const;
  static Mlp load(const std::string& path);

 private:
  std::vector<int> sizes_;
  Activation act_ = Activation::silu;
  std::vector<Parameter> weights_;  // in x out
  std::vector<Parameter> biases_;   // 1 x out
};

struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One Adam update from the gradients stored in params (bias-corrected moments).
void adam_step(AdamState& state, const std::vector<Parameter*>& params);
void zero_grad(const std::vector<Parameter*>& params);

/// target <- tau * online + (1 - tau) * target.
void polyak_update(const std::vector<Parameter*>& target, const std::vector<const Parameter*>& online, double tau);
void polyak_update(Mlp& target, const Mlp& online, double tau);

struct SquashedSample {
  Var action;    // tanh(pre_tanh)
  Var log_prob;  // n x 1, includes the tanh change-of-variables term
  Var pre_tanh;
};

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;

/// action = tanh(mean + exp(clamp(log_std)) * eps), differentiable in mean and log_std.
SquashedSample reparameterized_gaussian_sample(Tape& tape, Var mean, Var log_std, const Matrix& eps,
                                               double log_std_min = kLogStdMin,
                                               double log_std_max = kLogStdMax);

/// log(1 - tanh(u)^2) without cancellation for large |u|.
double log1m_tanh_sq(double u);
/// Scalar log-density of a tanh-squashed diagonal Gaussian at `action` (in (-1, 1)^d).
/// Returns -infinity on the boundary.
double squashed_gaussian_log_prob(const std::vector<double>& mean, const std::vector<double>& log_std,
                                  const std::vector<double>& action, double log_std_min = kLogStdMin,
                                  double log_std_max = kLogStdMax);

}  // namespace rdmdp::nn
