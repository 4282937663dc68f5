#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualcoder/embedding.hpp"
#include "dualcoder/error.hpp"
#include "dualcoder/mfcc.hpp"
#include "dualcoder/nn/init.hpp"
#include "dualcoder/nn/layers.hpp"
#include "dualcoder/nn/tape.hpp"
#include "dualcoder/prosody.hpp"
#include "dualcoder/rng.hpp"
#include "dualcoder/text.hpp"

namespace dualcoder {

using nn::Matrix;

// Fixed class order used everywhere: files, reports, confusion matrices.
inline const std::vector<std::string> kClassNames = {"angry", "happy", "sad", "neutral"};
inline constexpr int kNumClasses = 4;

enum class Variant { ARE, TRE, MDRE, MDREA };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::ARE: return "are";
    case Variant::TRE: return "tre";
    case Variant::MDRE: return "mdre";
    case Variant::MDREA: return "mdrea";
  }
  throw ValueError("unknown variant");
}

inline Variant variant_from_name(const std::string& name) {
  if (name == "are") return Variant::ARE;
  if (name == "tre") return Variant::TRE;
  if (name == "mdre") return Variant::MDRE;
  if (name == "mdrea") return Variant::MDREA;
  throw ValueError("unknown model variant '" + name + "' (expected are|tre|mdre|mdrea)");
}

inline bool uses_audio(Variant v) { return v != Variant::TRE; }
inline bool uses_text(Variant v) { return v != Variant::ARE; }

struct ModelConfig {
  Variant variant = Variant::MDRE;
  int audio_hidden = 32;
  int text_hidden = 32;
  int fusion_dim = 32;
  int audio_layers = 1;
  int text_layers = 1;
  int num_classes = kNumClasses;
  int max_audio_steps = 750;
  int max_text_steps = kMaxTextSteps;
  int embedding_dim = kEmbeddingDim;
  std::uint64_t seed = 1;
  bool train_embeddings = true;

  void validate() const {
    auto positive = [](int v, const char* what) {
      if (v < 1) throw ValueError(std::string("ModelConfig: ") + what + " must be positive");
    };
    positive(num_classes, "num_classes");
    positive(max_audio_steps, "max_audio_steps");
    positive(max_text_steps, "max_text_steps");
    if (uses_audio(variant)) {
      positive(audio_hidden, "audio_hidden");
      positive(audio_layers, "audio_layers");
    }
    if (uses_text(variant)) {
      positive(text_hidden, "text_hidden");
      positive(text_layers, "text_layers");
      positive(embedding_dim, "embedding_dim");
    }
    if (variant == Variant::MDRE || variant == Variant::MDREA) positive(fusion_dim, "fusion_dim");
  }

  int classifier_input_dim() const {
    switch (variant) {
      case Variant::ARE: return audio_hidden + kProsodyDim;
      case Variant::TRE: return text_hidden;
      case Variant::MDRE: return 2 * fusion_dim;
      case Variant::MDREA: return text_hidden + fusion_dim;
    }
    throw ValueError("unknown variant");
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"variant", variant_name(c.variant)},
                     {"audio_hidden", c.audio_hidden},
                     {"text_hidden", c.text_hidden},
                     {"fusion_dim", c.fusion_dim},
                     {"audio_layers", c.audio_layers},
                     {"text_layers", c.text_layers},
                     {"num_classes", c.num_classes},
                     {"max_audio_steps", c.max_audio_steps},
                     {"max_text_steps", c.max_text_steps},
                     {"embedding_dim", c.embedding_dim},
                     {"seed", c.seed},
                     {"train_embeddings", c.train_embeddings}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.variant = variant_from_name(j.at("variant").get<std::string>());
  j.at("audio_hidden").get_to(c.audio_hidden);
  j.at("text_hidden").get_to(c.text_hidden);
  j.at("fusion_dim").get_to(c.fusion_dim);
  j.at("audio_layers").get_to(c.audio_layers);
  j.at("text_layers").get_to(c.text_layers);
  j.at("num_classes").get_to(c.num_classes);
  j.at("max_audio_steps").get_to(c.max_audio_steps);
  j.at("max_text_steps").get_to(c.max_text_steps);
  j.at("embedding_dim").get_to(c.embedding_dim);
  j.at("seed").get_to(c.seed);
  j.at("train_embeddings").get_to(c.train_embeddings);
}

// One utterance, feature-extracted and encoded, ready for a model.
struct Sample {
  Matrix mfcc;               // T x 39 (empty for text-only models)
  Eigen::VectorXd prosody;   // 35
  TokenSequence tokens;      // empty ids for audio-only models
  int label = -1;
  std::string id;
};

// All trainable tensors of one variant plus the parallel gradient store.
// Recurrent weights start orthogonal, input-side weights Glorot-uniform,
// biases zero; every draw is a pure function of (seed, tensor name).
class ModelParams {
 public:
  ModelParams() = default;

  // vocab_size 0 is valid for ARE. initial_embeddings, when provided, must
  // be vocab_size x embedding_dim and overrides the random init.
  static ModelParams init(const ModelConfig& cfg, int vocab_size = 0,
                          const Matrix* initial_embeddings = nullptr) {
    cfg.validate();
    ModelParams p;
    p.cfg_ = cfg;
    if (uses_audio(cfg.variant)) {
      for (int l = 0; l < cfg.audio_layers; ++l)
        p.audio_gru_.push_back(p.make_gru(l == 0 ? kMfccDim : cfg.audio_hidden, cfg.audio_hidden,
                                          "audio_gru." + std::to_string(l)));
    }
    if (uses_text(cfg.variant)) {
      if (vocab_size < 2) throw ValueError("ModelParams: text variants need a vocabulary");
      if (initial_embeddings != nullptr) {
        if (initial_embeddings->rows() != vocab_size || initial_embeddings->cols() != cfg.embedding_dim)
          throw ShapeError("ModelParams: initial embeddings shape mismatch");
        p.embeddings_ = *initial_embeddings;
      } else {
        Rng rng(derive_seed(cfg.seed, "embeddings"));
        p.embeddings_.resize(vocab_size, cfg.embedding_dim);
        for (Eigen::Index r = 0; r < p.embeddings_.rows(); ++r)
          for (Eigen::Index c = 0; c < p.embeddings_.cols(); ++c)
            p.embeddings_(r, c) = rng.uniform(-0.05, 0.05);
        p.embeddings_.row(Vocabulary::kPadId).setZero();
      }
      for (int l = 0; l < cfg.text_layers; ++l)
        p.text_gru_.push_back(p.make_gru(l == 0 ? cfg.embedding_dim : cfg.text_hidden,
                                         cfg.text_hidden, "text_gru." + std::to_string(l)));
    }
    const int audio_enc_dim = cfg.audio_hidden + kProsodyDim;
    if (cfg.variant == Variant::MDRE || cfg.variant == Variant::MDREA)
      p.fusion_audio_ = p.make_dense(audio_enc_dim, cfg.fusion_dim, "fusion_audio");
    if (cfg.variant == Variant::MDRE)
      p.fusion_text_ = p.make_dense(cfg.text_hidden, cfg.fusion_dim, "fusion_text");
    if (cfg.variant == Variant::MDREA)
      p.attn_proj_ = p.make_dense(audio_enc_dim, cfg.text_hidden, "attn_proj");
    p.classifier_ = p.make_dense(cfg.classifier_input_dim(), cfg.num_classes, "classifier");
    p.alloc_grads();
    return p;
  }

  const ModelConfig& config() const { return cfg_; }
  const std::vector<nn::GruParams>& audio_gru() const { return audio_gru_; }
  const std::vector<nn::GruParams>& text_gru() const { return text_gru_; }
  const Matrix& embeddings() const { return embeddings_; }
  Matrix& mutable_embeddings() { return embeddings_; }
  const nn::DenseParams& fusion_audio() const { return fusion_audio_; }
  const nn::DenseParams& fusion_text() const { return fusion_text_; }
  const nn::DenseParams& attn_proj() const { return attn_proj_; }
  const nn::DenseParams& classifier() const { return classifier_; }

  nn::GruParams& mutable_audio_gru(int l) { return audio_gru_.at(static_cast<std::size_t>(l)); }
  nn::GruParams& mutable_text_gru(int l) { return text_gru_.at(static_cast<std::size_t>(l)); }
  nn::DenseParams& mutable_fusion_audio() { return fusion_audio_; }
  nn::DenseParams& mutable_fusion_text() { return fusion_text_; }
  nn::DenseParams& mutable_classifier() { return classifier_; }

  // Stable-ordered registry of trainable tensors and their gradient sinks.
  // The embedding table is listed only when it is trainable; its _PAD_ row
  // gradient is masked in the training step.
  std::vector<nn::ParamRef> params(bool include_frozen = false) {
    std::vector<nn::ParamRef> out;
    auto add_gru = [&out](const std::string& prefix, nn::GruParams& g, nn::GruParams& grad) {
      out.push_back({prefix + ".w_z", &g.w_z, &grad.w_z});
      out.push_back({prefix + ".w_r", &g.w_r, &grad.w_r});
      out.push_back({prefix + ".w_h", &g.w_h, &grad.w_h});
      out.push_back({prefix + ".u_z", &g.u_z, &grad.u_z});
      out.push_back({prefix + ".u_r", &g.u_r, &grad.u_r});
      out.push_back({prefix + ".u_h", &g.u_h, &grad.u_h});
      out.push_back({prefix + ".b_z", &g.b_z, &grad.b_z});
      out.push_back({prefix + ".b_r", &g.b_r, &grad.b_r});
      out.push_back({prefix + ".b_h", &g.b_h, &grad.b_h});
    };
    auto add_dense = [&out](const std::string& prefix, nn::DenseParams& d, nn::DenseParams& grad) {
      out.push_back({prefix + ".w", &d.w, &grad.w});
      out.push_back({prefix + ".b", &d.b, &grad.b});
    };
    for (std::size_t l = 0; l < audio_gru_.size(); ++l)
      add_gru("audio_gru." + std::to_string(l), audio_gru_[l], audio_gru_grad_[l]);
    if (embeddings_.size() != 0 && (cfg_.train_embeddings || include_frozen))
      out.push_back({"embeddings", &embeddings_, &embeddings_grad_});
    for (std::size_t l = 0; l < text_gru_.size(); ++l)
      add_gru("text_gru." + std::to_string(l), text_gru_[l], text_gru_grad_[l]);
    if (cfg_.variant == Variant::MDRE || cfg_.variant == Variant::MDREA)
      add_dense("fusion_audio", fusion_audio_, fusion_audio_grad_);
    if (cfg_.variant == Variant::MDRE) add_dense("fusion_text", fusion_text_, fusion_text_grad_);
    if (cfg_.variant == Variant::MDREA) add_dense("attn_proj", attn_proj_, attn_proj_grad_);
    add_dense("classifier", classifier_, classifier_grad_);
    return out;
  }

  Matrix& embeddings_grad() { return embeddings_grad_; }

 private:
  nn::GruParams make_gru(int in, int hidden, const std::string& name) {
    nn::GruParams g;
    g.w_z = nn::glorot_uniform(hidden, in, derive_seed(cfg_.seed, name + ".w_z"));
    g.w_r = nn::glorot_uniform(hidden, in, derive_seed(cfg_.seed, name + ".w_r"));
    g.w_h = nn::glorot_uniform(hidden, in, derive_seed(cfg_.seed, name + ".w_h"));
    g.u_z = nn::orthogonal_init(hidden, hidden, derive_seed(cfg_.seed, name + ".u_z"));
    g.u_r = nn::orthogonal_init(hidden, hidden, derive_seed(cfg_.seed, name + ".u_r"));
    g.u_h = nn::orthogonal_init(hidden, hidden, derive_seed(cfg_.seed, name + ".u_h"));
    g.b_z = Matrix::Zero(hidden, 1);
    g.b_r = Matrix::Zero(hidden, 1);
    g.b_h = Matrix::Zero(hidden, 1);
    return g;
  }

  nn::DenseParams make_dense(int in, int out, const std::string& name) {
    nn::DenseParams d;
    d.w = nn::glorot_uniform(out, in, derive_seed(cfg_.seed, name + ".w"));
    d.b = Matrix::Zero(out, 1);
    return d;
  }

  static nn::GruParams zero_like(const nn::GruParams& g) {
    nn::GruParams z;
    z.w_z = Matrix::Zero(g.w_z.rows(), g.w_z.cols());
    z.w_r = Matrix::Zero(g.w_r.rows(), g.w_r.cols());
    z.w_h = Matrix::Zero(g.w_h.rows(), g.w_h.cols());
    z.u_z = Matrix::Zero(g.u_z.rows(), g.u_z.cols());
    z.u_r = Matrix::Zero(g.u_r.rows(), g.u_r.cols());
    z.u_h = Matrix::Zero(g.u_h.rows(), g.u_h.cols());
    z.b_z = Matrix::Zero(g.b_z.rows(), 1);
    z.b_r = Matrix::Zero(g.b_r.rows(), 1);
    z.b_h = Matrix::Zero(g.b_h.rows(), 1);
    return z;
  }

  void alloc_grads() {
    audio_gru_grad_.clear();
    text_gru_grad_.clear();
    for (const auto& g : audio_gru_) audio_gru_grad_.push_back(zero_like(g));
    for (const auto& g : text_gru_) text_gru_grad_.push_back(zero_like(g));
    embeddings_grad_ = Matrix::Zero(embeddings_.rows(), embeddings_.cols());
    auto dense_zero = [](const nn::DenseParams& d) {
      nn::DenseParams z;
      z.w = Matrix::Zero(d.w.rows(), d.w.cols());
      z.b = Matrix::Zero(d.b.rows(), 1);
      return z;
    };
    fusion_audio_grad_ = dense_zero(fusion_audio_);
    fusion_text_grad_ = dense_zero(fusion_text_);
    attn_proj_grad_ = dense_zero(attn_proj_);
    classifier_grad_ = dense_zero(classifier_);
  }

  friend class Checkpoint;

  ModelConfig cfg_;
  std::vector<nn::GruParams> audio_gru_, audio_gru_grad_;
  std::vector<nn::GruParams> text_gru_, text_gru_grad_;
  Matrix embeddings_, embeddings_grad_;
  nn::DenseParams fusion_audio_, fusion_audio_grad_;
  nn::DenseParams fusion_text_, fusion_text_grad_;
  nn::DenseParams attn_proj_, attn_proj_grad_;
  nn::DenseParams classifier_, classifier_grad_;
};

namespace detail {

struct AudioEncoding {
  Matrix e;            // (audio_hidden + 35) x 1
};

inline Matrix encode_stack(const Matrix& seq, int true_len, const std::vector<nn::GruParams>& layers,
                           Matrix* top_states = nullptr) {
  Matrix input = seq;
  nn::GruEncoded enc;
  for (const auto& layer : layers) {
    enc = nn::gru_encode(input, true_len, layer);
    input = enc.states;
  }
  if (top_states != nullptr) *top_states = enc.states;
  return enc.last;
}

inline int audio_true_len(const Matrix& mfcc, const ModelConfig& cfg) {
  const int t = static_cast<int>(mfcc.rows());
  if (t < 1) throw ValueError("model forward: empty MFCC sequence");
  return std::min(t, cfg.max_audio_steps);
}

inline Matrix audio_context(const ModelParams& p, const Sample& s) {
  const ModelConfig& cfg = p.config();
  const int len = audio_true_len(s.mfcc, cfg);
  if (s.prosody.size() != kProsodyDim) throw ShapeError("model forward: prosody must be 35-dim");
  const Matrix last = encode_stack(s.mfcc, len, p.audio_gru());
  Matrix e(cfg.audio_hidden + kProsodyDim, 1);
  e << last, s.prosody;
  return e;
}

inline Matrix text_states(const ModelParams& p, const Sample& s, Matrix* states_out) {
  const ModelConfig& cfg = p.config();
  if (s.tokens.true_len < 1) throw ValueError("model forward: all-pad token sequence");
  const int len = std::min(s.tokens.true_len, cfg.max_text_steps);
  Matrix embedded(len, cfg.embedding_dim);
  for (int t = 0; t < len; ++t) {
    const auto id = s.tokens.ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= p.embeddings().rows()) throw ValueError("model forward: token id out of range");
    embedded.row(t) = p.embeddings().row(id);
  }
  return encode_stack(embedded, len, p.text_gru(), states_out);
}

}  // namespace detail

// Logits for any variant; MDREA also reports its attention weights over the
// non-pad text positions when attn_out is given.
inline Eigen::VectorXd forward_logits(const ModelParams& p, const Sample& s,
                                      Eigen::VectorXd* attn_out = nullptr) {
  const ModelConfig& cfg = p.config();
  Matrix features;
  switch (cfg.variant) {
    case Variant::ARE:
      features = detail::audio_context(p, s);
      break;
    case Variant::TRE:
      features = detail::text_states(p, s, nullptr);
      break;
    case Variant::MDRE: {
      const Matrix e = detail::audio_context(p, s);
      const Matrix h_last = detail::text_states(p, s, nullptr);
      const Matrix a = nn::dense(e, p.fusion_audio(), nn::Activation::Tanh);
      const Matrix t = nn::dense(h_last, p.fusion_text(), nn::Activation::Tanh);
      features.resize(a.rows() + t.rows(), 1);
      features << a, t;
      break;
    }
    case Variant::MDREA: {
      const Matrix e = detail::audio_context(p, s);
      Matrix states;
      detail::text_states(p, s, &states);
      const Matrix context = nn::dense(e, p.attn_proj(), nn::Activation::None);
      const int len = std::min(s.tokens.true_len, cfg.max_text_steps);
      const nn::AttentionResult att = nn::attention(context, states, len);
      if (attn_out != nullptr) *attn_out = att.weights;
      const Matrix a = nn::dense(e, p.fusion_audio(), nn::Activation::Tanh);
      features.resize(att.summary.rows() + a.rows(), 1);
      features << att.summary, a;
      break;
    }
  }
  return nn::dense(features, p.classifier(), nn::Activation::None).col(0);
}

struct Prediction {
  int class_index = -1;
  Eigen::VectorXd probs;
};

// Argmax with ties broken toward the lowest class index.
inline Prediction predict(const Eigen::VectorXd& logits) {
  Prediction out;
  const Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
  const Eigen::ArrayXd e = shifted.exp();
  out.probs = (e / e.sum()).matrix();
  out.class_index = 0;
  for (int c = 1; c < logits.size(); ++c)
    if (logits[c] > logits[out.class_index]) out.class_index = c;
  return out;
}

// --- Training-path forward: same graph recorded on a tape. ---

struct ModelVars {
  std::vector<nn::GruVars> audio_gru, text_gru;
  nn::Tape::Var embeddings;
  nn::DenseVars fusion_audio, fusion_text, attn_proj, classifier;
};

// Registers every trainable tensor as a tape leaf wired to its grad sink.
inline ModelVars register_params(nn::Tape& tape, ModelParams& p) {
  ModelVars vars;
  auto refs = p.params(/*include_frozen=*/true);
  std::size_t i = 0;
  auto next = [&refs, &i, &tape](const std::string& expect) {
    if (i >= refs.size() || refs[i].name != expect)
      throw StateError("register_params: registry out of sync at " + expect);
    nn::Tape::Var v = tape.param(*refs[i].value, refs[i].grad);
    ++i;
    return v;
  };
  auto take_gru = [&next](const std::string& prefix) {
    nn::GruVars g;
    g.w_z = next(prefix + ".w_z");
    g.w_r = next(prefix + ".w_r");
    g.w_h = next(prefix + ".w_h");
    g.u_z = next(prefix + ".u_z");
    g.u_r = next(prefix + ".u_r");
    g.u_h = next(prefix + ".u_h");
    g.b_z = next(prefix + ".b_z");
    g.b_r = next(prefix + ".b_r");
    g.b_h = next(prefix + ".b_h");
    return g;
  };
  const ModelConfig& cfg = p.config();
  for (int l = 0; l < static_cast<int>(p.audio_gru().size()); ++l)
    vars.audio_gru.push_back(take_gru("audio_gru." + std::to_string(l)));
  if (uses_text(cfg.variant)) vars.embeddings = next("embeddings");
  for (int l = 0; l < static_cast<int>(p.text_gru().size()); ++l)
    vars.text_gru.push_back(take_gru("text_gru." + std::to_string(l)));
  auto take_dense = [&next](const std::string& prefix) {
    nn::DenseVars d;
    d.w = next(prefix + ".w");
    d.b = next(prefix + ".b");
    return d;
  };
  if (cfg.variant == Variant::MDRE || cfg.variant == Variant::MDREA)
    vars.fusion_audio = take_dense("fusion_audio");
  if (cfg.variant == Variant::MDRE) vars.fusion_text = take_dense("fusion_text");
  if (cfg.variant == Variant::MDREA) vars.attn_proj = take_dense("attn_proj");
  vars.classifier = take_dense("classifier");
  return vars;
}

namespace detail {

inline nn::TapeGruEncoded tape_encode_stack(nn::Tape& tape, const std::vector<nn::Tape::Var>& inputs,
                                            int hidden, const std::vector<nn::GruVars>& layers) {
  nn::TapeGruEncoded enc;
  std::vector<nn::Tape::Var> layer_in = inputs;
  for (const auto& layer : layers) {
    enc = nn::tape_gru_encode(tape, layer_in, hidden, layer);
    layer_in = enc.states;
  }
  return enc;
}

inline nn::Tape::Var tape_audio_context(nn::Tape& tape, const ModelVars& vars,
                                        const ModelParams& p, const Sample& s) {
  const ModelConfig& cfg = p.config();
  const int len = audio_true_len(s.mfcc, cfg);
  std::vector<nn::Tape::Var> inputs;
  inputs.reserve(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t) inputs.push_back(tape.input(s.mfcc.row(t).transpose()));
  const auto enc = tape_encode_stack(tape, inputs, cfg.audio_hidden, vars.audio_gru);
  return tape.concat(enc.last, tape.input(s.prosody));
}

inline nn::TapeGruEncoded tape_text_encode(nn::Tape& tape, const ModelVars& vars,
                                           const ModelParams& p, const Sample& s) {
  const ModelConfig& cfg = p.config();
  if (s.tokens.true_len < 1) throw ValueError("model forward: all-pad token sequence");
  const int len = std::min(s.tokens.true_len, cfg.max_text_steps);
  std::vector<nn::Tape::Var> inputs;
  inputs.reserve(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t)
    inputs.push_back(tape.row(vars.embeddings, s.tokens.ids[static_cast<std::size_t>(t)]));
  return tape_encode_stack(tape, inputs, cfg.text_hidden, vars.text_gru);
}

}  // namespace detail

inline nn::Tape::Var tape_forward_logits(nn::Tape& tape, const ModelVars& vars, ModelParams& p,
                                         const Sample& s) {
  const ModelConfig& cfg = p.config();
  nn::Tape::Var features;
  switch (cfg.variant) {
    case Variant::ARE:
      features = detail::tape_audio_context(tape, vars, p, s);
      break;
    case Variant::TRE:
      features = detail::tape_text_encode(tape, vars, p, s).last;
      break;
    case Variant::MDRE: {
      nn::Tape::Var e = detail::tape_audio_context(tape, vars, p, s);
      nn::Tape::Var h_last = detail::tape_text_encode(tape, vars, p, s).last;
      nn::Tape::Var a = nn::tape_dense(tape, e, vars.fusion_audio, nn::Activation::Tanh);
      nn::Tape::Var t = nn::tape_dense(tape, h_last, vars.fusion_text, nn::Activation::Tanh);
      features = tape.concat(a, t);
      break;
    }
    case Variant::MDREA: {
      nn::Tape::Var e = detail::tape_audio_context(tape, vars, p, s);
      const auto enc = detail::tape_text_encode(tape, vars, p, s);
      nn::Tape::Var context = nn::tape_dense(tape, e, vars.attn_proj, nn::Activation::None);
      const auto att = nn::tape_attention(tape, context, enc.states);
      nn::Tape::Var a = nn::tape_dense(tape, e, vars.fusion_audio, nn::Activation::Tanh);
      features = tape.concat(att.summary, a);
      break;
    }
  }
  return nn::tape_dense(tape, features, vars.classifier, nn::Activation::None);
}

}  // namespace dualcoder
