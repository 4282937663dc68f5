#pragma once

#include <cmath>
#include <vector>

#include "dualcoder/error.hpp"
#include "dualcoder/nn/tape.hpp"

namespace dualcoder::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter first/second moments plus the shared step count. Moments are
// indexed by position in the parameter list, which must stay stable across
// steps.
class AdamState {
 public:
  void step(const std::vector<ParamRef>& params, const AdamConfig& cfg) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(Matrix::Zero(p.value->rows(), p.value->cols()));
        v_.emplace_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      }
    }
    if (m_.size() != params.size()) throw StateError("AdamState: parameter list changed size");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix& g = *params[i].grad;
      Matrix& m = m_[i];
      Matrix& v = v_[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v.array().matrix() + (1.0 - cfg.beta2) * g.cwiseProduct(g);
      const auto m_hat = m.array() / bc1;
      const auto v_hat = v.array() / bc2;
      params[i].value->array() -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
  }

  long step_count() const { return t_; }

 private:
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

// Global-norm gradient clipping; returns the pre-clip norm.
inline double clip_grad_norm(const std::vector<ParamRef>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) sq += p.grad->squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& p : params) *p.grad *= scale;
  }
  return norm;
}

inline void zero_grads(const std::vector<ParamRef>& params) {
  for (const auto& p : params) p.grad->setZero();
}

}  // namespace dualcoder::nn
