#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dualcoder/error.hpp"

namespace dualcoder::nn {

using Matrix = Eigen::MatrixXd;

// A named trainable tensor with its parallel gradient accumulator. The grad
// matrices across a model form its gradient store; they are zeroed between
// optimizer steps.
struct ParamRef {
  std::string name;
  Matrix* value = nullptr;
  Matrix* grad = nullptr;
};

// Reverse-mode tape over column vectors and matrices (fp64 throughout).
// A forward pass records one node per primitive op; backward() replays the
// recording in reverse, accumulating into parameter gradient sinks.
class Tape {
 public:
  struct Var {
    int i = -1;
    bool valid() const { return i >= 0; }
  };

  const Matrix& value(Var v) const { return node(v).external ? *node(v).external : node(v).value; }

  // Constant input leaf (no gradient flows out of the tape for it).
  Var input(Matrix m) {
    nodes_.push_back(Node{std::move(m), nullptr, {}, {}});
    return {last()};
  }

  // Parameter leaf: value lives outside the tape; gradient accumulates into
  // *grad_sink when backward() finishes.
  Var param(const Matrix& value, Matrix* grad_sink) {
    nodes_.push_back(Node{Matrix{}, &value, {}, {}});
    if (grad_sink != nullptr) sinks_.push_back({last(), grad_sink});
    return {last()};
  }

  Var zeros(Eigen::Index rows, Eigen::Index cols = 1) { return input(Matrix::Zero(rows, cols)); }

  // y = W x for a column vector x.
  Var matvec(Var w, Var x) {
    const Matrix& wm = value(w);
    const Matrix& xm = value(x);
    if (xm.cols() != 1 || wm.cols() != xm.rows())
      throw ShapeError("matvec: W is " + dims(wm) + ", x is " + dims(xm));
    Var out = fresh(wm * xm);
    record(out, [this, w, x, out]() {
      const Matrix& g = grad_of(out);
      add_grad(w, g * value(x).transpose());
      add_grad(x, value(w).transpose() * g);
    });
    return out;
  }

  Var add(Var a, Var b) {
    check_same_shape("add", a, b);
    Var out = fresh(value(a) + value(b));
    record(out, [this, a, b, out]() {
      add_grad(a, grad_of(out));
      add_grad(b, grad_of(out));
    });
    return out;
  }

  // k * x + c elementwise.
  Var affine(Var x, double k, double c) {
    Var out = fresh((k * value(x).array() + c).matrix());
    record(out, [this, x, out, k]() { add_grad(x, k * grad_of(out)); });
    return out;
  }

  Var mul(Var a, Var b) {
    check_same_shape("mul", a, b);
    Var out = fresh(value(a).cwiseProduct(value(b)));
    record(out, [this, a, b, out]() {
      add_grad(a, grad_of(out).cwiseProduct(value(b)));
      add_grad(b, grad_of(out).cwiseProduct(value(a)));
    });
    return out;
  }

  Var sigmoid(Var x) {
    Var out = fresh((1.0 / (1.0 + (-value(x).array()).exp())).matrix());
    record(out, [this, x, out]() {
      const auto& s = value(out).array();
      add_grad(x, (grad_of(out).array() * s * (1.0 - s)).matrix());
    });
    return out;
  }

  Var tanh(Var x) {
    Var out = fresh(value(x).array().tanh().matrix());
    record(out, [this, x, out]() {
      const auto& t = value(out).array();
      add_grad(x, (grad_of(out).array() * (1.0 - t * t)).matrix());
    });
    return out;
  }

  // Column vectors stacked vertically.
  Var concat(Var a, Var b) {
    const Matrix& am = value(a);
    const Matrix& bm = value(b);
    if (am.cols() != 1 || bm.cols() != 1) throw ShapeError("concat: expects column vectors");
    Matrix v(am.rows() + bm.rows(), 1);
    v << am, bm;
    Var out = fresh(std::move(v));
    record(out, [this, a, b, out]() {
      const Matrix& g = grad_of(out);
      add_grad(a, g.topRows(value(a).rows()));
      add_grad(b, g.bottomRows(value(b).rows()));
    });
    return out;
  }

  // Scalar product of two equally sized column vectors; result is 1x1.
  Var dot(Var a, Var b) {
    check_same_shape("dot", a, b);
    Var out = fresh(Matrix::Constant(1, 1, value(a).cwiseProduct(value(b)).sum()));
    record(out, [this, a, b, out]() {
      const double g = grad_of(out)(0, 0);
      add_grad(a, g * value(b));
      add_grad(b, g * value(a));
    });
    return out;
  }

  // L scalar nodes -> one L x 1 vector node.
  Var stack(const std::vector<Var>& scalars) {
    if (scalars.empty()) throw ShapeError("stack: empty input");
    Matrix v(static_cast<Eigen::Index>(scalars.size()), 1);
    for (std::size_t i = 0; i < scalars.size(); ++i) {
      const Matrix& s = value(scalars[i]);
      if (s.size() != 1) throw ShapeError("stack: inputs must be scalars");
      v(static_cast<Eigen::Index>(i), 0) = s(0, 0);
    }
    Var out = fresh(std::move(v));
    record(out, [this, scalars, out]() {
      const Matrix& g = grad_of(out);
      for (std::size_t i = 0; i < scalars.size(); ++i)
        add_grad(scalars[i], Matrix::Constant(1, 1, g(static_cast<Eigen::Index>(i), 0)));
    });
    return out;
  }

  // Numerically stable softmax over a column vector.
  Var softmax(Var scores) {
    const Matrix& s = value(scores);
    if (s.cols() != 1) throw ShapeError("softmax: expects a column vector");
    Eigen::ArrayXd e = (s.col(0).array() - s.col(0).maxCoeff()).exp();
    Var out = fresh(Matrix((e / e.sum()).matrix()));
    record(out, [this, scores, out]() {
      const auto& p = value(out).col(0).array();
      const auto& g = grad_of(out).col(0).array();
      const double inner = (p * g).sum();
      add_grad(scores, Matrix((p * (g - inner)).matrix()));
    });
    return out;
  }

  // Z = sum_i weights[i] * vecs[i].
  Var mix(Var weights, const std::vector<Var>& vecs) {
    const Matrix& w = value(weights);
    if (w.cols() != 1 || static_cast<std::size_t>(w.rows()) != vecs.size())
      throw ShapeError("mix: weight count must match vector count");
    Matrix acc = Matrix::Zero(value(vecs[0]).rows(), 1);
    for (std::size_t i = 0; i < vecs.size(); ++i)
      acc += w(static_cast<Eigen::Index>(i), 0) * value(vecs[i]);
    Var out = fresh(std::move(acc));
    record(out, [this, weights, vecs, out]() {
      const Matrix& g = grad_of(out);
      const Matrix& w2 = value(weights);
      Matrix gw(w2.rows(), 1);
      for (std::size_t i = 0; i < vecs.size(); ++i) {
        gw(static_cast<Eigen::Index>(i), 0) = g.cwiseProduct(value(vecs[i])).sum();
        add_grad(vecs[i], w2(static_cast<Eigen::Index>(i), 0) * g);
      }
      add_grad(weights, gw);
    });
    return out;
  }

  // Embedding row lookup: row r of a (V x d) table as a d x 1 vector.
  Var row(Var table, Eigen::Index r) {
    const Matrix& t = value(table);
    if (r < 0 || r >= t.rows()) throw ShapeError("row: index out of range");
    Var out = fresh(t.row(r).transpose());
    record(out, [this, table, r, out]() { add_grad_row(table, r, grad_of(out)); });
    return out;
  }

  // Fused softmax + negative log-likelihood; returns the scalar loss node.
  // probs_out, when given, receives the softmax distribution (a plain value).
  Var softmax_xent(Var logits, int label, Eigen::VectorXd* probs_out = nullptr) {
    const Matrix& z = value(logits);
    if (z.cols() != 1 || z.rows() < 2) throw ShapeError("softmax_xent: logits must be a column vector, C >= 2");
    if (label < 0 || label >= z.rows())
      throw ValueError("softmax_xent: label " + std::to_string(label) + " out of range");
    Eigen::ArrayXd shifted = z.col(0).array() - z.col(0).maxCoeff();
    Eigen::ArrayXd e = shifted.exp();
    Eigen::VectorXd probs = (e / e.sum()).matrix();
    if (probs_out != nullptr) *probs_out = probs;
    const double loss = -(shifted(label) - std::log(e.sum()));
    Var out = fresh(Matrix::Constant(1, 1, loss));
    record(out, [this, logits, label, probs, out]() {
      const double g = grad_of(out)(0, 0);
      Matrix d = probs;
      d(label, 0) -= 1.0;
      add_grad(logits, g * d);
    });
    return out;
  }

  // Seeds d(loss)/d(loss) = 1, runs all recorded ops in reverse, then flushes
  // parameter gradients into their sinks.
  void backward(Var loss) {
    if (!loss.valid() || loss.i >= static_cast<int>(nodes_.size()))
      throw StateError("backward: no recorded forward pass for this loss");
    if (value(loss).size() != 1) throw StateError("backward: loss must be scalar");
    if (backward_done_) throw StateError("backward: already called on this tape");
    backward_done_ = true;
    node(loss).grad = Matrix::Constant(1, 1, 1.0);
    for (int i = loss.i; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.back && n.grad.size() != 0) n.back();
    }
    for (auto& [idx, sink] : sinks_) {
      Node& n = nodes_[static_cast<std::size_t>(idx)];
      if (n.grad.size() != 0) *sink += n.grad;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    std::function<void()> back;
  };

  int last() const { return static_cast<int>(nodes_.size()) - 1; }

  Node& node(Var v) {
    if (!v.valid() || v.i >= static_cast<int>(nodes_.size()))
      throw StateError("invalid tape variable");
    return nodes_[static_cast<std::size_t>(v.i)];
  }
  const Node& node(Var v) const {
    if (!v.valid() || v.i >= static_cast<int>(nodes_.size()))
      throw StateError("invalid tape variable");
    return nodes_[static_cast<std::size_t>(v.i)];
  }

  Var fresh(Matrix value) {
    nodes_.push_back(Node{std::move(value), nullptr, {}, {}});
    return {last()};
  }

  void record(Var v, std::function<void()> back) { node(v).back = std::move(back); }

  Matrix& grad_of(Var v) { return node(v).grad; }

  void add_grad(Var v, const Matrix& g) {
    Node& n = node(v);
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }
  void add_grad(Var v, Matrix&& g) {
    Node& n = node(v);
    if (n.grad.size() == 0)
      n.grad = std::move(g);
    else
      n.grad += g;
  }

  // Row-sparse accumulation for embedding lookups; avoids materializing a
  // full V x d gradient per token.
  void add_grad_row(Var v, Eigen::Index r, const Matrix& grow) {
    Node& n = node(v);
    if (n.grad.size() == 0) n.grad = Matrix::Zero(value(v).rows(), value(v).cols());
    n.grad.row(r) += grow.transpose();
  }

  void check_same_shape(const char* op, Var a, Var b) const {
    const Matrix& am = value(a);
    const Matrix& bm = value(b);
    if (am.rows() != bm.rows() || am.cols() != bm.cols())
      throw ShapeError(std::string(op) + ": shape mismatch " + dims(am) + " vs " + dims(bm));
  }

  static std::string dims(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<int, Matrix*>> sinks_;
  bool backward_done_ = false;
};

}  // namespace dualcoder::nn
