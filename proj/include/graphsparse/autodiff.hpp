#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace graphsparse::ad {

using Matrix = Eigen::MatrixXd;
using IndexMatrix = Eigen::MatrixXi;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

/// Reverse-mode tape over dense double matrices.
///
/// Parameters are referenced, not copied; their gradients accumulate straight
/// into caller-owned matrices. With gradients disabled no backward closures
/// are recorded and the tape is a plain evaluator. Forward values do not
/// depend on whether gradients are enabled.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Matrix value);
  /// A parameter leaf. `grad_sink` may be null (treated as a constant).
  Var parameter(const Matrix& value, Matrix* grad_sink);

  /// Records an op result. `backward` is dropped when no input needs a gradient.
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }
  Var push(Matrix value, std::span<const Var> inputs, Backward backward);

  const Matrix& value(int id) const {
    const Node& n = nodes_[id];
    return n.ref ? *n.ref : n.owned;
  }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Adds `g` into the gradient of node `id` (no-op when it needs none).
  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.sink) {
      n.sink->noalias() += g;
    } else if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad.noalias() += g;
    }
  }

  /// Seeds d(loss)/d(loss) = seed for a 1x1 node and runs every backward closure.
  void backward(Var loss, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix owned;
    const Matrix* ref = nullptr;
    Matrix grad;
    Matrix* sink = nullptr;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  bool grad_enabled_;
};

inline const Matrix& Var::value() const { return tape->value(id); }

// Linear algebra.
Var matmul(Var a, Var b);     // A B
Var matmul_nt(Var a, Var b);  // A B^T

// Elementwise, same shape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// a + broadcast of the 1 x n row over every row of a.
Var add_row(Var a, Var row);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var square(Var a);

/// Row-wise layer normalization with 1 x n gain and bias.
Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);
Var softmax_rows(Var a);

// Shape.
Var concat_rows(Var top, Var bottom);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
/// out(i, j) = a(i, index(i, j)).
Var gather_cols(Var a, std::shared_ptr<const IndexMatrix> index);

// Reductions.
Var mean_rows(Var a);  // 1 x n
Var sum(Var a);        // 1 x 1

}  // namespace graphsparse::ad
