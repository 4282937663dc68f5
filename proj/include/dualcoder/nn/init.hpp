#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <cmath>
#include <cstdint>

#include "dualcoder/nn/tape.hpp"
#include "dualcoder/rng.hpp"

namespace dualcoder::nn {

// Orthogonal(-row/column) matrix from the QR decomposition of a seeded
// Gaussian draw, sign-corrected so that diag(R) > 0, which pins down the
// otherwise ambiguous factorization and makes the result a pure function of
// the seed. For square sizes Q'Q = I to machine precision.
inline Matrix orthogonal_init(int rows, int cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw ShapeError("orthogonal_init: dims must be positive");
  const bool wide = rows < cols;
  const int r = wide ? cols : rows;
  const int c = wide ? rows : cols;
  Rng rng(seed);
  Matrix g(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) g(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(r, c);
  const Matrix rmat = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  for (int j = 0; j < c; ++j)
    if (rmat(j, j) < 0.0) q.col(j) = -q.col(j);
  return wide ? Matrix(q.transpose()) : q;
}

// Glorot/fan-balanced uniform init for non-recurrent weights.
inline Matrix glorot_uniform(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

}  // namespace dualcoder::nn
