#include "graphsparse/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace graphsparse::ad {

Var Tape::constant(Matrix value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(const Matrix& value, Matrix* grad_sink) {
  Node n;
  n.ref = &value;
  if (grad_enabled_ && grad_sink) {
    n.sink = grad_sink;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(Matrix value, std::span<const Var> inputs, Backward backward) {
  Node n;
  n.owned = std::move(value);
  if (grad_enabled_) {
    for (const Var& v : inputs) n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var loss, double seed) {
  if (!grad_enabled_) throw std::logic_error("Tape::backward on a tape without gradients");
  if (loss.rows() != 1 || loss.cols() != 1) throw std::logic_error("Tape::backward: loss must be 1x1");
  Node& root = nodes_[loss.id];
  if (!root.requires_grad) return;
  if (root.sink) {
    (*root.sink)(0, 0) += seed;
    return;
  }
  root.grad = Matrix::Constant(1, 1, seed);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) {
      n.backward(*this, n.grad);
      n.grad.resize(0, 0);
    }
  }
}

namespace {

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
}

int next_id(Var a) { return static_cast<int>(a.tape->size()); }

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(b.id).transpose());
    if (t.requires_grad(b.id)) t.accumulate(b.id, t.value(a.id).transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  Matrix out(a.rows(), b.rows());
  out.noalias() = a.value() * b.value().transpose();
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(b.id));
    if (t.requires_grad(b.id)) t.accumulate(b.id, g.transpose() * t.value(a.id));
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  return a.tape->push(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  return a.tape->push(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a.id, g);
    t.accumulate(b.id, -g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  return a.tape->push(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a.id)) t.accumulate(a.id, g.cwiseProduct(t.value(b.id)));
    if (t.requires_grad(b.id)) t.accumulate(b.id, g.cwiseProduct(t.value(a.id)));
  });
}

Var scale(Var a, double s) {
  return a.tape->push(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a.id, g * s); });
}

Var add_scalar(Var a, double s) {
  return a.tape->push((a.value().array() + s).matrix(), {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a.id, g); });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: row shape mismatch");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape->push(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a.id, g);
    if (t.requires_grad(row.id)) t.accumulate(row.id, g.colwise().sum());
  });
}

Var relu(Var a) {
  const int out = next_id(a);
  return a.tape->push(a.value().cwiseMax(0.0), {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a.id, (t.value(out).array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Var sigmoid(Var a) {
  const int out = next_id(a);
  Matrix y = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return a.tape->push(std::move(y), {a}, [a, out](Tape& t, const Matrix& g) {
    const auto& y = t.value(out).array();
    t.accumulate(a.id, (g.array() * y * (1.0 - y)).matrix());
  });
}

Var tanh(Var a) {
  const int out = next_id(a);
  return a.tape->push(a.value().array().tanh().matrix(), {a}, [a, out](Tape& t, const Matrix& g) {
    const auto& y = t.value(out).array();
    t.accumulate(a.id, (g.array() * (1.0 - y * y)).matrix());
  });
}

Var exp(Var a) {
  const int out = next_id(a);
  return a.tape->push(a.value().array().exp().matrix(), {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a.id, g.cwiseProduct(t.value(out)));
  });
}

Var square(Var a) {
  return a.tape->push(a.value().cwiseAbs2(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a.id, 2.0 * g.cwiseProduct(t.value(a.id)));
  });
}

Var layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  const auto n = x.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n)
    throw std::invalid_argument("layer_norm_rows: gain/bias shape mismatch");
  const Matrix& xv = x.value();
  auto xhat = std::make_shared<Matrix>(xv.rows(), n);
  auto inv_std = std::make_shared<Eigen::VectorXd>(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)(r) = is;
    xhat->row(r) = (xv.row(r).array() - mu) * is;
  }
  Matrix y = xhat->array().rowwise() * gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  return x.tape->push(std::move(y), {x, gain, bias}, [x, gain, bias, xhat, inv_std](Tape& t, const Matrix& g) {
    if (t.requires_grad(bias.id)) t.accumulate(bias.id, g.colwise().sum());
    if (t.requires_grad(gain.id)) t.accumulate(gain.id, g.cwiseProduct(*xhat).colwise().sum());
    if (t.requires_grad(x.id)) {
      Matrix gh = g.array().rowwise() * t.value(gain.id).row(0).array();
      const auto n = static_cast<double>(gh.cols());
      Matrix dx(gh.rows(), gh.cols());
      for (Eigen::Index r = 0; r < gh.rows(); ++r) {
        const double m1 = gh.row(r).sum() / n;
        const double m2 = gh.row(r).dot(xhat->row(r)) / n;
        dx.row(r) = (*inv_std)(r) * (gh.row(r).array() - m1 - xhat->row(r).array() * m2);
      }
      t.accumulate(x.id, dx);
    }
  });
}

Var softmax_rows(Var a) {
  const int out = next_id(a);
  Matrix y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  return a.tape->push(std::move(y), {a}, [a, out](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(out);
    const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    t.accumulate(a.id, (y.array() * (g.array().colwise() - dots.array())).matrix());
  });
}

Var concat_rows(Var top, Var bottom) {
  if (top.cols() != bottom.cols()) throw std::invalid_argument("concat_rows: column mismatch");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top.value();
  out.bottomRows(bottom.rows()) = bottom.value();
  const auto split = top.rows();
  return top.tape->push(std::move(out), {top, bottom}, [top, bottom, split](Tape& t, const Matrix& g) {
    if (t.requires_grad(top.id)) t.accumulate(top.id, g.topRows(split));
    if (t.requires_grad(bottom.id)) t.accumulate(bottom.id, g.bottomRows(g.rows() - split));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != parts[0].rows()) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(parts[0].rows(), cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  auto copy = parts;
  return parts[0].tape->push(std::move(out), std::span<const Var>(parts), [copy](Tape& t, const Matrix& g) {
    Eigen::Index c = 0;
    for (const Var& p : copy) {
      if (t.requires_grad(p.id)) t.accumulate(p.id, g.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw std::invalid_argument("slice_rows: out of range");
  return a.tape->push(a.value().middleRows(start, count), {a}, [a, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(t.value(a.id).rows(), t.value(a.id).cols());
    full.middleRows(start, count) = g;
    t.accumulate(a.id, full);
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::invalid_argument("slice_cols: out of range");
  return a.tape->push(a.value().middleCols(start, count), {a}, [a, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(t.value(a.id).rows(), t.value(a.id).cols());
    full.middleCols(start, count) = g;
    t.accumulate(a.id, full);
  });
}

Var gather_cols(Var a, std::shared_ptr<const IndexMatrix> index) {
  const IndexMatrix& idx = *index;
  if (idx.rows() != a.rows()) throw std::invalid_argument("gather_cols: row mismatch");
  const Matrix& av = a.value();
  Matrix out(idx.rows(), idx.cols());
  for (Eigen::Index j = 0; j < idx.cols(); ++j)
    for (Eigen::Index i = 0; i < idx.rows(); ++i) out(i, j) = av(i, idx(i, j));
  return a.tape->push(std::move(out), {a}, [a, index](Tape& t, const Matrix& g) {
    const IndexMatrix& idx = *index;
    Matrix full = Matrix::Zero(t.value(a.id).rows(), t.value(a.id).cols());
    for (Eigen::Index j = 0; j < idx.cols(); ++j)
      for (Eigen::Index i = 0; i < idx.rows(); ++i) full(i, idx(i, j)) += g(i, j);
    t.accumulate(a.id, full);
  });
}

Var mean_rows(Var a) {
  const auto n = static_cast<double>(a.rows());
  return a.tape->push(a.value().colwise().mean(), {a}, [a, n](Tape& t, const Matrix& g) {
    t.accumulate(a.id, g.replicate(t.value(a.id).rows(), 1) / n);
  });
}

Var sum(Var a) {
  return a.tape->push(Matrix::Constant(1, 1, a.value().sum()), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a.id, Matrix::Constant(t.value(a.id).rows(), t.value(a.id).cols(), g(0, 0)));
  });
}

}  // namespace graphsparse::ad
