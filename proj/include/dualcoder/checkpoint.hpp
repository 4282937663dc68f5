#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualcoder/error.hpp"
#include "dualcoder/feature_file.hpp"
#include "dualcoder/models.hpp"
#include "dualcoder/text.hpp"

namespace dualcoder {

// Checkpoint file, little-endian:
//   magic "DCKPT1", u32 blob length, config JSON blob (model config, vocab,
//   feature settings, seeds), u32 tensor count, then per tensor:
//   u32 name length, name bytes, u32 rank, u32 dims[rank], float64 row-major
//   data. Round-trips bit-exactly.

namespace detail {

inline void put_f64le(std::string& out, double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  append_u32le(out, static_cast<std::uint32_t>(u & 0xffffffffULL));
  append_u32le(out, static_cast<std::uint32_t>(u >> 32));
}

inline double get_f64le(const unsigned char*& p, const unsigned char* end) {
  if (end - p < 8) throw FormatError("checkpoint truncated");
  std::uint64_t lo = read_u32le(p);
  std::uint64_t hi = read_u32le(p + 4);
  p += 8;
  std::uint64_t u = lo | (hi << 32);
  double d;
  std::memcpy(&d, &u, 8);
  return d;
}

}  // namespace detail

struct Checkpoint {
  ModelParams params;
  std::vector<std::string> vocab_tokens;  // empty for audio-only models
  nlohmann::json meta;                    // the full config blob

  static void save(const std::string& path, ModelParams& params, const Vocabulary* vocab,
                   nlohmann::json extra = nlohmann::json::object()) {
    nlohmann::json blob;
    blob["model"] = params.config();
    blob["vocab"] = vocab != nullptr ? nlohmann::json(vocab->tokens()) : nlohmann::json::array();
    for (auto& [key, value] : extra.items()) blob[key] = value;

    std::string out;
    out += "DCKPT1";
    const std::string blob_str = blob.dump();
    detail::append_u32le(out, static_cast<std::uint32_t>(blob_str.size()));
    out += blob_str;

    auto refs = params.params(/*include_frozen=*/true);
    detail::append_u32le(out, static_cast<std::uint32_t>(refs.size()));
    for (const auto& ref : refs) {
      detail::append_u32le(out, static_cast<std::uint32_t>(ref.name.size()));
      out += ref.name;
      detail::append_u32le(out, 2);
      detail::append_u32le(out, static_cast<std::uint32_t>(ref.value->rows()));
      detail::append_u32le(out, static_cast<std::uint32_t>(ref.value->cols()));
      for (Eigen::Index r = 0; r < ref.value->rows(); ++r)
        for (Eigen::Index c = 0; c < ref.value->cols(); ++c)
          detail::put_f64le(out, (*ref.value)(r, c));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const unsigned char* end = p + bytes.size();
    if (bytes.size() < 6 || std::memcmp(p, "DCKPT1", 6) != 0)
      throw FormatError("bad checkpoint magic: " + path);
    p += 6;
    const std::uint32_t blob_len = detail::get_u32le(p, end);
    if (static_cast<std::size_t>(end - p) < blob_len) throw FormatError("checkpoint truncated");
    nlohmann::json blob = nlohmann::json::parse(std::string(reinterpret_cast<const char*>(p), blob_len));
    p += blob_len;

    Checkpoint ckpt;
    ckpt.meta = blob;
    const ModelConfig cfg = blob.at("model").get<ModelConfig>();
    ckpt.vocab_tokens = blob.at("vocab").get<std::vector<std::string>>();
    ckpt.params = ModelParams::init(cfg, static_cast<int>(ckpt.vocab_tokens.size()));

    auto refs = ckpt.params.params(/*include_frozen=*/true);
    const std::uint32_t count = detail::get_u32le(p, end);
    if (count != refs.size())
      throw FormatError("checkpoint tensor count " + std::to_string(count) + ", expected " +
                        std::to_string(refs.size()));
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t name_len = detail::get_u32le(p, end);
      if (static_cast<std::size_t>(end - p) < name_len) throw FormatError("checkpoint truncated");
      std::string name(reinterpret_cast<const char*>(p), name_len);
      p += name_len;
      if (name != refs[i].name)
        throw FormatError("checkpoint tensor '" + name + "' does not match expected '" +
                          refs[i].name + "'");
      const std::uint32_t rank = detail::get_u32le(p, end);
      if (rank != 2) throw FormatError("checkpoint tensor rank must be 2");
      const std::uint32_t rows = detail::get_u32le(p, end);
      const std::uint32_t cols = detail::get_u32le(p, end);
      if (rows != refs[i].value->rows() || cols != refs[i].value->cols())
        throw FormatError("checkpoint tensor '" + name + "' has unexpected shape");
      for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c)
          (*refs[i].value)(r, c) = detail::get_f64le(p, end);
    }
    return ckpt;
  }
};

}  // namespace dualcoder
