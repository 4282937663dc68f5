#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dualcoder/error.hpp"
#include "dualcoder/nn/tape.hpp"

namespace dualcoder::nn {

// Gated recurrent unit cell. Column-vector convention: input weights are
// (hidden x in), recurrent weights (hidden x hidden), biases (hidden x 1),
// i.e. the update/reset/candidate pre-activations are W x + U h_prev + b.
struct GruParams {
  Matrix w_z, w_r, w_h;
  Matrix u_z, u_r, u_h;
  Matrix b_z, b_r, b_h;

  int input_dim() const { return static_cast<int>(w_z.cols()); }
  int hidden_dim() const { return static_cast<int>(w_z.rows()); }

  void validate() const {
    const auto h = w_z.rows();
    const auto in = w_z.cols();
    auto check = [&](const Matrix& m, Eigen::Index r, Eigen::Index c, const char* name) {
      if (m.rows() != r || m.cols() != c)
        throw ShapeError(std::string("GruParams: ") + name + " has inconsistent shape");
    };
    check(w_r, h, in, "w_r");
    check(w_h, h, in, "w_h");
    check(u_z, h, h, "u_z");
    check(u_r, h, h, "u_r");
    check(u_h, h, h, "u_h");
    check(b_z, h, 1, "b_z");
    check(b_r, h, 1, "b_r");
    check(b_h, h, 1, "b_h");
  }
};

struct DenseParams {
  Matrix w;  // out x in
  Matrix b;  // out x 1

  void validate() const {
    if (b.rows() != w.rows() || b.cols() != 1) throw ShapeError("DenseParams: bias shape mismatch");
  }
};

enum class Activation { None, Tanh };

namespace detail {

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) { return 1.0 / (1.0 + (-x).exp()); }

}  // namespace detail

// z = sigma(W_z x + U_z h + b_z); r = sigma(W_r x + U_r h + b_r);
// hcand = tanh(W_h x + U_h (r . h) + b_h); h' = (1 - z) . h + z . hcand
inline Matrix gru_step(const Matrix& h_prev, const Matrix& x, const GruParams& p) {
  if (x.rows() != p.w_z.cols() || x.cols() != 1)
    throw ShapeError("gru_step: input dim " + std::to_string(x.rows()) + " vs expected " +
                     std::to_string(p.w_z.cols()));
  if (h_prev.rows() != p.w_z.rows() || h_prev.cols() != 1)
    throw ShapeError("gru_step: hidden dim mismatch");
  const Eigen::ArrayXd z = detail::sigmoid(((p.w_z * x + p.u_z * h_prev + p.b_z)).array());
  const Eigen::ArrayXd r = detail::sigmoid(((p.w_r * x + p.u_r * h_prev + p.b_r)).array());
  const Matrix rh = (r * h_prev.array()).matrix();
  const Eigen::ArrayXd hc = ((p.w_h * x + p.u_h * rh + p.b_h)).array().tanh();
  return ((1.0 - z) * h_prev.array() + z * hc).matrix();
}

struct GruEncoded {
  Matrix states;  // T x hidden; rows beyond true_len stay zero (not computed)
  Matrix last;    // hidden x 1, the state at t = true_len
};

// Runs the cell over rows 1..true_len of seq from h0 = 0. The state at
// t = true_len is the sequence's representative vector.
inline GruEncoded gru_encode(const Matrix& seq, int true_len, const GruParams& p) {
  if (true_len < 1) throw ValueError("gru_encode: empty sequence has no representative state");
  if (true_len > seq.rows()) throw ShapeError("gru_encode: true_len exceeds sequence length");
  const int hidden = p.hidden_dim();
  GruEncoded out;
  out.states = Matrix::Zero(seq.rows(), hidden);
  Matrix h = Matrix::Zero(hidden, 1);
  for (int t = 0; t < true_len; ++t) {
    h = gru_step(h, seq.row(t).transpose(), p);
    out.states.row(t) = h.transpose();
  }
  out.last = h;
  return out;
}

struct AttentionResult {
  Eigen::VectorXd weights;  // length T; exactly zero beyond true_len
  Matrix summary;           // hidden x 1
};

// Dot-product attention: a_t = softmax_t(e . h_t) over t <= true_len,
// Z = sum_t a_t h_t. states is T x hidden, e is hidden x 1.
inline AttentionResult attention(const Matrix& e, const Matrix& states, int true_len) {
  if (e.cols() != 1 || e.rows() != states.cols())
    throw ShapeError("attention: context dim " + std::to_string(e.rows()) +
                     " vs state dim " + std::to_string(states.cols()));
  if (true_len < 1 || true_len > states.rows())
    throw ValueError("attention: true_len out of range");
  Eigen::VectorXd scores(true_len);
  for (int t = 0; t < true_len; ++t) scores[t] = (states.row(t) * e)(0, 0);
  const Eigen::ArrayXd shifted = scores.array() - scores.maxCoeff();
  const Eigen::ArrayXd ex = shifted.exp();
  const Eigen::ArrayXd a = ex / ex.sum();
  AttentionResult out;
  out.weights = Eigen::VectorXd::Zero(states.rows());
  out.weights.head(true_len) = a.matrix();
  out.summary = Matrix::Zero(states.cols(), 1);
  for (int t = 0; t < true_len; ++t) out.summary += a[t] * states.row(t).transpose();
  return out;
}

struct SoftmaxXent {
  Eigen::VectorXd probs;
  double loss = 0.0;
};

// Stable softmax + negative log-likelihood of the labeled class.
inline SoftmaxXent softmax_xent(const Eigen::VectorXd& logits, int label) {
  if (logits.size() < 2) throw ShapeError("softmax_xent: need C >= 2 classes");
  if (label < 0 || label >= logits.size())
    throw ValueError("softmax_xent: label " + std::to_string(label) + " out of range for C = " +
                     std::to_string(logits.size()));
  const Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
  const Eigen::ArrayXd e = shifted.exp();
  SoftmaxXent out;
  out.probs = (e / e.sum()).matrix();
  out.loss = -(shifted(label) - std::log(e.sum()));
  return out;
}

inline Matrix dense(const Matrix& x, const DenseParams& p, Activation act) {
  if (x.cols() != 1 || x.rows() != p.w.cols())
    throw ShapeError("dense: input dim " + std::to_string(x.rows()) + " vs expected " +
                     std::to_string(p.w.cols()));
  Matrix y = p.w * x + p.b;
  if (act == Activation::Tanh) y = y.array().tanh().matrix();
  return y;
}

// --- Tape counterparts, used by the training path. ---

struct GruVars {
  Tape::Var w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h;
};

struct DenseVars {
  Tape::Var w, b;
};

inline Tape::Var tape_gru_step(Tape& tape, Tape::Var h_prev, Tape::Var x, const GruVars& p) {
  auto gate = [&](Tape::Var w, Tape::Var u, Tape::Var b, Tape::Var h_in) {
    return tape.add(tape.add(tape.matvec(w, x), tape.matvec(u, h_in)), b);
  };
  Tape::Var z = tape.sigmoid(gate(p.w_z, p.u_z, p.b_z, h_prev));
  Tape::Var r = tape.sigmoid(gate(p.w_r, p.u_r, p.b_r, h_prev));
  Tape::Var rh = tape.mul(r, h_prev);
  Tape::Var hc = tape.tanh(tape.add(tape.add(tape.matvec(p.w_h, x), tape.matvec(p.u_h, rh)), p.b_h));
  return tape.add(tape.mul(tape.affine(z, -1.0, 1.0), h_prev), tape.mul(z, hc));
}

struct TapeGruEncoded {
  std::vector<Tape::Var> states;  // one per t < true_len
  Tape::Var last;
};

inline TapeGruEncoded tape_gru_encode(Tape& tape, const std::vector<Tape::Var>& inputs,
                                      int hidden, const GruVars& p) {
  if (inputs.empty()) throw ValueError("tape_gru_encode: empty sequence");
  TapeGruEncoded out;
  Tape::Var h = tape.zeros(hidden);
  for (const Tape::Var& x : inputs) {
    h = tape_gru_step(tape, h, x, p);
    out.states.push_back(h);
  }
  out.last = h;
  return out;
}

inline Tape::Var tape_dense(Tape& tape, Tape::Var x, const DenseVars& p, Activation act) {
  Tape::Var y = tape.add(tape.matvec(p.w, x), p.b);
  return act == Activation::Tanh ? tape.tanh(y) : y;
}

struct TapeAttention {
  Tape::Var weights;  // true_len x 1
  Tape::Var summary;
};

inline TapeAttention tape_attention(Tape& tape, Tape::Var context,
                                    const std::vector<Tape::Var>& states) {
  if (states.empty()) throw ValueError("tape_attention: no states");
  std::vector<Tape::Var> scores;
  scores.reserve(states.size());
  for (const Tape::Var& h : states) scores.push_back(tape.dot(context, h));
  TapeAttention out;
  out.weights = tape.softmax(tape.stack(scores));
  out.summary = tape.mix(out.weights, states);
  return out;
}

}  // namespace dualcoder::nn
