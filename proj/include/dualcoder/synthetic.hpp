#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualcoder/dsp.hpp"
#include "dualcoder/error.hpp"
#include "dualcoder/rng.hpp"
#include "dualcoder/wav.hpp"

namespace dualcoder {

// Synthetic bimodal corpus. Each utterance carries an audio cue (base pitch
// low or high) and a text cue (one of two keywords inside filler words); the
// label is determined by the (pitch, keyword) pair:
//     (low,  K1) -> angry     (low,  K2) -> happy
//     (high, K1) -> sad       (high, K2) -> neutral
// so either modality alone separates the classes only into pairs, while both
// together identify the class. Labels are flipped to a random other class with
// probability `label_noise`.
struct SyntheticOptions {
  int num_utterances = 64;
  std::uint64_t seed = 1;
  double label_noise = 0.05;
  int sample_rate = 16000;
};

inline const std::vector<std::string> kSyntheticKeywords = {"crimson", "violet"};
inline const std::vector<std::string> kSyntheticFillers = {
    "the", "a", "and", "so", "well", "you", "know", "it", "is",
    "was", "really", "quite", "just", "then", "maybe", "there"};

namespace detail {

inline std::vector<double> tone_sequence(Rng& rng, double base_hz, double seconds,
                                         int sample_rate) {
  const int total = static_cast<int>(seconds * sample_rate);
  std::vector<double> out(static_cast<std::size_t>(total));
  const int segments = 3 + static_cast<int>(rng.uniform_int(3));
  int pos = 0;
  double phase = 0.0;
  for (int s = 0; s < segments; ++s) {
    const int seg_len = (s == segments - 1) ? total - pos : total / segments;
    const double freq = base_hz * rng.uniform(0.95, 1.05);
    const double amp = rng.uniform(0.25, 0.5);
    for (int i = 0; i < seg_len && pos < total; ++i, ++pos) {
      phase += 2.0 * kPi * freq / sample_rate;
      out[static_cast<std::size_t>(pos)] = amp * std::sin(phase) + rng.uniform(-0.004, 0.004);
    }
  }
  // Short fades keep the file click-free.
  const int fade = std::min(total / 10, sample_rate / 200);
  for (int i = 0; i < fade; ++i) {
    const double g = static_cast<double>(i) / fade;
    out[static_cast<std::size_t>(i)] *= g;
    out[static_cast<std::size_t>(total - 1 - i)] *= g;
  }
  return out;
}

inline std::string synthetic_transcript(Rng& rng, const std::string& keyword) {
  const int len = 5 + static_cast<int>(rng.uniform_int(7));
  const int kw_pos = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(len)));
  std::string text;
  for (int i = 0; i < len; ++i) {
    if (!text.empty()) text += ' ';
    if (i == kw_pos)
      text += keyword;
    else
      text += kSyntheticFillers[rng.uniform_int(kSyntheticFillers.size())];
  }
  return text;
}

}  // namespace detail

// Writes wavs/utt_NNNNN.wav files, manifest.jsonl and gen_meta.json under
// out_dir; returns the manifest path. Byte-identical for identical options.
inline std::string gen_synthetic(const SyntheticOptions& opt, const std::string& out_dir) {
  if (opt.num_utterances < 1) throw ValueError("gen_synthetic: need at least one utterance");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "wavs", ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir + " (" + ec.message() + ")");

  const std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest: " + manifest_path);

  for (int i = 0; i < opt.num_utterances; ++i) {
    Rng rng(derive_seed(opt.seed, "utt-" + std::to_string(i)));
    const int cell = i % 4;  // cycles keep the corpus balanced
    const bool high_pitch = cell >= 2;
    const int keyword = cell % 2;
    int label = cell;
    if (opt.label_noise > 0.0 && rng.uniform() < opt.label_noise)
      label = (label + 1 + static_cast<int>(rng.uniform_int(3))) % 4;

    const double base_hz = high_pitch ? rng.uniform(240.0, 300.0) : rng.uniform(110.0, 150.0);
    const double seconds = rng.uniform(0.6, 1.0);
    AudioBuffer audio;
    audio.sample_rate = opt.sample_rate;
    audio.samples = detail::tone_sequence(rng, base_hz, seconds, opt.sample_rate);

    char name[32];
    std::snprintf(name, sizeof(name), "utt_%05d", i);
    const std::string wav_rel = std::string("wavs/") + name + ".wav";
    write_wav((fs::path(out_dir) / wav_rel).string(), audio);

    nlohmann::json rec = {
        {"id", name},
        {"wav", wav_rel},
        {"transcript", detail::synthetic_transcript(rng, kSyntheticKeywords[static_cast<std::size_t>(keyword)])},
        {"label", kClassNamesForSynthetic()[static_cast<std::size_t>(label)]},
        {"speaker", "spk" + std::to_string(i % 8)},
        {"session", "s" + std::to_string(i % 5 + 1)}};
    manifest << rec.dump() << '\n';
  }
  manifest.close();

  nlohmann::json meta = {{"num_utterances", opt.num_utterances},
                         {"seed", opt.seed},
                         {"label_noise", opt.label_noise},
                         {"sample_rate", opt.sample_rate}};
  std::ofstream meta_out((fs::path(out_dir) / "gen_meta.json").string(), std::ios::trunc);
  meta_out << meta.dump(2) << '\n';
  return manifest_path;
}

// Class order must match kClassNames in models.hpp; kept as a function to
// avoid an include cycle with heavier headers.
inline const std::vector<std::string>& kClassNamesForSynthetic() {
  static const std::vector<std::string> names = {"angry", "happy", "sad", "neutral"};
  return names;
}

}  // namespace dualcoder
