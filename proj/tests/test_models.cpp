#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "dualcoder/checkpoint.hpp"
#include "dualcoder/nn/adam.hpp"
#include "dualcoder/models.hpp"
#include "dualcoder/rng.hpp"
#include "test_util.hpp"

using namespace dualcoder;
using nn::Matrix;

namespace {

ModelConfig tiny_config(Variant v, std::uint64_t seed = 1) {
  ModelConfig cfg;
  cfg.variant = v;
  cfg.audio_hidden = 8;
  cfg.text_hidden = 8;
  cfg.fusion_dim = 8;
  cfg.embedding_dim = 6;
  cfg.max_audio_steps = 20;
  cfg.max_text_steps = 16;
  cfg.seed = seed;
  return cfg;
}

Sample random_sample(const ModelConfig& cfg, int t_audio, int t_text, int vocab_size, Rng& rng) {
  Sample s;
  s.mfcc.resize(t_audio, kMfccDim);
  for (int t = 0; t < t_audio; ++t)
    for (int j = 0; j < kMfccDim; ++j) s.mfcc(t, j) = rng.uniform(-2.0, 2.0);
  s.prosody.resize(kProsodyDim);
  for (int j = 0; j < kProsodyDim; ++j) s.prosody[j] = rng.uniform(-2.0, 2.0);
  s.tokens.ids.assign(static_cast<std::size_t>(cfg.max_text_steps), Vocabulary::kPadId);
  s.tokens.true_len = t_text;
  for (int t = 0; t < t_text; ++t)
    s.tokens.ids[static_cast<std::size_t>(t)] =
        1 + static_cast<std::int32_t>(rng.uniform_int(static_cast<std::uint64_t>(vocab_size - 1)));
  s.label = static_cast<int>(rng.uniform_int(4));
  return s;
}

void zero_gru_params(nn::GruParams& g) {
  g.w_z.setZero();
  g.w_r.setZero();
  g.w_h.setZero();
  g.u_z.setZero();
  g.u_r.setZero();
  g.u_h.setZero();
  g.b_z.setZero();
  g.b_r.setZero();
  g.b_h.setZero();
}

// Mean loss over a batch: analytic grads via per-sample tapes (scaled after),
// numeric via the pure forward path.
double batch_loss(ModelParams& params, const std::vector<Sample>& batch) {
  double acc = 0.0;
  for (const auto& s : batch) acc += nn::softmax_xent(forward_logits(params, s), s.label).loss;
  return acc / static_cast<double>(batch.size());
}

void accumulate_batch_grads(ModelParams& params, const std::vector<Sample>& batch) {
  nn::zero_grads(params.params(true));
  for (const auto& s : batch) {
    nn::Tape tape;
    ModelVars vars = register_params(tape, params);
    auto logits = tape_forward_logits(tape, vars, params, s);
    tape.backward(tape.softmax_xent(logits, s.label));
  }
  for (auto& ref : params.params(true)) *ref.grad /= static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("ARE with zero GRU params and zero prosody yields the classifier bias") {
  ModelConfig cfg = tiny_config(Variant::ARE);
  ModelParams p = ModelParams::init(cfg);
  zero_gru_params(p.mutable_audio_gru(0));
  Rng rng(5);
  Sample s = random_sample(cfg, 6, 0, 2, rng);
  s.prosody.setZero();
  Eigen::VectorXd logits = forward_logits(p, s);
  REQUIRE(logits.size() == 4);
  CHECK((logits - p.classifier().b.col(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("logits dimension is C for every variant") {
  Rng rng(7);
  for (Variant v : {Variant::ARE, Variant::TRE, Variant::MDRE, Variant::MDREA}) {
    ModelConfig cfg = tiny_config(v);
    ModelParams p = ModelParams::init(cfg, 9);
    Sample s = random_sample(cfg, 5, 4, 9, rng);
    CHECK(forward_logits(p, s).size() == 4);
  }
}

TEST_CASE("TRE single token state equals one GRU step on its embedding") {
  ModelConfig cfg = tiny_config(Variant::TRE);
  ModelParams p = ModelParams::init(cfg, 9);
  Rng rng(9);
  Sample s = random_sample(cfg, 1, 1, 9, rng);
  const auto id = s.tokens.ids[0];
  Matrix h = nn::gru_step(Matrix::Zero(cfg.text_hidden, 1),
                          p.embeddings().row(id).transpose(), p.text_gru()[0]);
  Eigen::VectorXd logits = forward_logits(p, s);
  Eigen::VectorXd manual = nn::dense(h, p.classifier(), nn::Activation::None).col(0);
  CHECK((logits - manual).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("TRE rejects all-pad sequences; ARE rejects empty audio") {
  ModelConfig cfg = tiny_config(Variant::TRE);
  ModelParams p = ModelParams::init(cfg, 9);
  Rng rng(11);
  Sample s = random_sample(cfg, 1, 0, 9, rng);
  CHECK_THROWS_AS(forward_logits(p, s), ValueError);

  ModelConfig acfg = tiny_config(Variant::ARE);
  ModelParams ap = ModelParams::init(acfg);
  Sample empty = random_sample(acfg, 1, 0, 2, rng);
  empty.mfcc.resize(0, kMfccDim);
  CHECK_THROWS_AS(forward_logits(ap, empty), ValueError);
}

TEST_CASE("padding beyond true_len never changes logits") {
  Rng rng(13);
  for (Variant v : {Variant::ARE, Variant::TRE, Variant::MDRE, Variant::MDREA}) {
    ModelConfig cfg = tiny_config(v);
    ModelParams p = ModelParams::init(cfg, 9);
    for (int trial = 0; trial < 25; ++trial) {
      Sample s = random_sample(cfg, cfg.max_audio_steps, 4, 9, rng);
      Eigen::VectorXd base = forward_logits(p, s);

      Sample padded = s;
      // Junk frames past the audio cap and junk ids past the text length.
      padded.mfcc.conservativeResize(cfg.max_audio_steps + 5, kMfccDim);
      for (int t = cfg.max_audio_steps; t < cfg.max_audio_steps + 5; ++t)
        for (int j = 0; j < kMfccDim; ++j) padded.mfcc(t, j) = rng.uniform(-100.0, 100.0);
      for (int t = padded.tokens.true_len; t < cfg.max_text_steps; ++t)
        padded.tokens.ids[static_cast<std::size_t>(t)] =
            static_cast<std::int32_t>(rng.uniform_int(9));

      Eigen::VectorXd with_pad = forward_logits(p, padded);
      REQUIRE((base - with_pad).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("MDRE with zero fusion layers yields the classifier bias") {
  ModelConfig cfg = tiny_config(Variant::MDRE);
  ModelParams p = ModelParams::init(cfg, 9);
  p.mutable_fusion_audio().w.setZero();
  p.mutable_fusion_audio().b.setZero();
  p.mutable_fusion_text().w.setZero();
  p.mutable_fusion_text().b.setZero();
  Rng rng(15);
  Sample s = random_sample(cfg, 5, 3, 9, rng);
  Eigen::VectorXd logits = forward_logits(p, s);
  CHECK((logits - p.classifier().b.col(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("MDRE with zeroed text input weights ignores the transcript") {
  ModelConfig cfg = tiny_config(Variant::MDRE);
  ModelParams p = ModelParams::init(cfg, 9);
  auto& text0 = p.mutable_text_gru(0);
  text0.w_z.setZero();
  text0.w_r.setZero();
  text0.w_h.setZero();
  Rng rng(17);
  Sample a = random_sample(cfg, 5, 4, 9, rng);
  Sample b = a;
  // Different tokens, same true_len.
  for (int t = 0; t < b.tokens.true_len; ++t)
    b.tokens.ids[static_cast<std::size_t>(t)] =
        1 + static_cast<std::int32_t>(rng.uniform_int(8));
  CHECK((forward_logits(p, a) - forward_logits(p, b)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("MDREA collapses attention onto a single token") {
  ModelConfig cfg = tiny_config(Variant::MDREA);
  ModelParams p = ModelParams::init(cfg, 9);
  Rng rng(19);
  Sample s = random_sample(cfg, 5, 1, 9, rng);
  Eigen::VectorXd weights;
  Eigen::VectorXd logits = forward_logits(p, s, &weights);
  REQUIRE(weights.size() == 1);
  CHECK(weights[0] == 1.0);

  // Z = h_1 regardless of the audio, so logits match a manual assembly.
  const Matrix e = [&] {
    auto enc = nn::gru_encode(s.mfcc, 5, p.audio_gru()[0]);
    Matrix out(cfg.audio_hidden + kProsodyDim, 1);
    out << enc.last, s.prosody;
    return out;
  }();
  Matrix h1 = nn::gru_step(Matrix::Zero(cfg.text_hidden, 1),
                           p.embeddings().row(s.tokens.ids[0]).transpose(), p.text_gru()[0]);
  Matrix a = nn::dense(e, p.fusion_audio(), nn::Activation::Tanh);
  Matrix feat(h1.rows() + a.rows(), 1);
  feat << h1, a;
  Eigen::VectorXd manual = nn::dense(feat, p.classifier(), nn::Activation::None).col(0);
  CHECK((logits - manual).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("MDREA attention weights form a distribution over non-pad positions") {
  ModelConfig cfg = tiny_config(Variant::MDREA);
  ModelParams p = ModelParams::init(cfg, 9);
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int t_text = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.max_text_steps)));
    Sample s = random_sample(cfg, 4, t_text, 9, rng);
    Eigen::VectorXd weights;
    forward_logits(p, s, &weights);
    REQUIRE(weights.size() == t_text);
    double sum = 0.0;
    for (int t = 0; t < weights.size(); ++t) {
      REQUIRE(weights[t] >= 0.0);
      sum += weights[t];
    }
    REQUIRE(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("predict breaks ties toward the lowest class and is shift invariant") {
  Eigen::VectorXd flat = Eigen::VectorXd::Ones(4);
  CHECK(predict(flat).class_index == 0);

  Eigen::VectorXd peaked(4);
  peaked << 0, 5, 0, 0;
  auto pred = predict(peaked);
  CHECK(pred.class_index == 1);
  CHECK(pred.probs[1] > 0.98);

  Eigen::VectorXd shifted = peaked.array() + 123.0;
  CHECK(predict(shifted).class_index == 1);
}

TEST_CASE("tape and pure forward paths agree for every variant") {
  Rng rng(23);
  for (Variant v : {Variant::ARE, Variant::TRE, Variant::MDRE, Variant::MDREA}) {
    ModelConfig cfg = tiny_config(v);
    ModelParams p = ModelParams::init(cfg, 9);
    Sample s = random_sample(cfg, 5, 4, 9, rng);
    Eigen::VectorXd pure = forward_logits(p, s);
    nn::Tape tape;
    ModelVars vars = register_params(tape, p);
    auto logits = tape_forward_logits(tape, vars, p, s);
    CHECK((tape.value(logits).col(0) - pure).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("full-graph gradient check per variant at desk dims") {
  Rng rng(29);
  for (Variant v : {Variant::ARE, Variant::TRE, Variant::MDRE, Variant::MDREA}) {
    ModelConfig cfg = tiny_config(v, 31);
    ModelParams p = ModelParams::init(cfg, 7);
    std::vector<Sample> batch = {random_sample(cfg, 5, 4, 7, rng), random_sample(cfg, 5, 4, 7, rng)};
    accumulate_batch_grads(p, batch);
    auto refs = p.params(true);
    const double max_rel =
        testutil::finite_difference_check(refs, [&]() { return batch_loss(p, batch); });
    INFO("variant " << variant_name(v));
    CHECK(max_rel < 1e-4);
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  testutil::TempDir tmp("ckpt");
  ModelConfig cfg = tiny_config(Variant::MDREA, 77);
  Vocabulary vocab = build_vocab({{"alpha", "beta", "gamma"}});
  ModelParams p = ModelParams::init(cfg, vocab.size());
  nlohmann::json extra = {{"frame_ms", 25}, {"hop_ms", 10}, {"run_seed", 5}};
  Checkpoint::save(tmp.file("m.dckpt"), p, &vocab, extra);

  Checkpoint loaded = Checkpoint::load(tmp.file("m.dckpt"));
  CHECK(loaded.params.config().variant == Variant::MDREA);
  CHECK(loaded.vocab_tokens == vocab.tokens());
  CHECK(loaded.meta.at("frame_ms") == 25);

  auto orig = p.params(true);
  auto back = loaded.params.params(true);
  REQUIRE(orig.size() == back.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    REQUIRE(orig[i].name == back[i].name);
    REQUIRE(orig[i].value->rows() == back[i].value->rows());
    REQUIRE(std::memcmp(orig[i].value->data(), back[i].value->data(),
                        sizeof(double) * static_cast<std::size_t>(orig[i].value->size())) == 0);
  }

  // Byte-level determinism of the writer.
  Checkpoint::save(tmp.file("m2.dckpt"), p, &vocab, extra);
  CHECK(testutil::read_file_bytes(tmp.file("m.dckpt")) ==
        testutil::read_file_bytes(tmp.file("m2.dckpt")));

  testutil::write_file_bytes(tmp.file("bad.dckpt"), "NOTACKPT");
  CHECK_THROWS_AS(Checkpoint::load(tmp.file("bad.dckpt")), FormatError);
}

TEST_CASE("pad row of the embedding table never receives gradient") {
  ModelConfig cfg = tiny_config(Variant::TRE);
  ModelParams p = ModelParams::init(cfg, 9);
  Rng rng(41);
  Sample s = random_sample(cfg, 1, 4, 9, rng);
  accumulate_batch_grads(p, {s});
  CHECK(p.embeddings_grad().row(Vocabulary::kPadId).cwiseAbs().maxCoeff() == 0.0);
  // Looked-up rows do receive gradient.
  CHECK(p.embeddings_grad().row(s.tokens.ids[0]).cwiseAbs().maxCoeff() > 0.0);
}
