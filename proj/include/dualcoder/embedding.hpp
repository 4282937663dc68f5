#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "dualcoder/error.hpp"
#include "dualcoder/rng.hpp"
#include "dualcoder/text.hpp"

namespace dualcoder {

inline constexpr int kEmbeddingDim = 300;

// V x dim word-embedding table. Row 0 (_PAD_) is pinned to zeros.
struct EmbeddingMatrix {
  Eigen::MatrixXd weights;
  bool trainable = true;

  void validate() const {
    if (weights.rows() < 2) throw ShapeError("EmbeddingMatrix: needs at least pad and unk rows");
    if (weights.row(0).cwiseAbs().maxCoeff() != 0.0)
      throw ValueError("EmbeddingMatrix: _PAD_ row must be zero");
    if (!weights.allFinite()) throw ValueError("EmbeddingMatrix: non-finite entry");
  }
};

// Loads pretrained vectors ("token v1 .. vdim" per line) for in-vocab rows;
// rows not covered are drawn uniform(-0.05, 0.05) from the seeded generator,
// in row order so the result is independent of file ordering. An empty path
// initializes every row randomly. The _PAD_ row is always forced to zeros.
inline EmbeddingMatrix load_embeddings(const std::string& path, const Vocabulary& vocab,
                                       std::uint64_t seed, int dim = kEmbeddingDim) {
  const auto v = static_cast<std::size_t>(vocab.size());
  EmbeddingMatrix emb;
  emb.weights.resize(static_cast<Eigen::Index>(v), dim);
  std::vector<bool> covered(v, false);

  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file: " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string token;
      ss >> token;
      const std::int32_t id = vocab.id_of(token);
      const bool in_vocab = (vocab.token_of(id) == token);
      Eigen::RowVectorXd row(dim);
      for (int j = 0; j < dim; ++j) {
        if (!(ss >> row[j]))
          throw ParseError("embedding line has fewer than " + std::to_string(dim + 1) + " fields",
                           line_no);
      }
      double extra;
      if (ss >> extra)
        throw ParseError("embedding line has more than " + std::to_string(dim + 1) + " fields",
                         line_no);
      if (in_vocab && id != Vocabulary::kPadId) {
        emb.weights.row(id) = row;
        covered[static_cast<std::size_t>(id)] = true;
      }
    }
  }

  Rng rng(derive_seed(seed, "embedding-init"));
  for (std::size_t r = 0; r < v; ++r) {
    if (covered[r]) continue;
    for (int j = 0; j < dim; ++j) emb.weights(static_cast<Eigen::Index>(r), j) = rng.uniform(-0.05, 0.05);
  }
  emb.weights.row(Vocabulary::kPadId).setZero();
  emb.validate();
  return emb;
}

}  // namespace dualcoder
