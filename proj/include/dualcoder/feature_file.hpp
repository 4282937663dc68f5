#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>

#include "dualcoder/error.hpp"
#include "dualcoder/mfcc.hpp"
#include "dualcoder/prosody.hpp"

namespace dualcoder {

// Per-utterance feature file, little-endian:
//   magic "DCF1", u32 T, u32 39, T*39 float32 row-major MFCC block,
//   u32 35, 35 float32 prosody block.

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) { append_u32le(out, v); }

inline void put_f32le(std::string& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  append_u32le(out, u);
}

inline std::uint32_t get_u32le(const unsigned char*& p, const unsigned char* end) {
  if (end - p < 4) throw FormatError("feature file truncated");
  std::uint32_t v = read_u32le(p);
  p += 4;
  return v;
}

inline float get_f32le(const unsigned char*& p, const unsigned char* end) {
  std::uint32_t u = get_u32le(p, end);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

}  // namespace detail

inline void write_feature_file(const std::string& path, const MfccSequence& mfcc,
                               const ProsodyVector& prosody) {
  mfcc.validate();
  prosody.validate();
  std::string out;
  const auto t_count = static_cast<std::uint32_t>(mfcc.frames.rows());
  out.reserve(16 + 4u * (t_count * kMfccDim + kProsodyDim));
  out += "DCF1";
  detail::put_u32le(out, t_count);
  detail::put_u32le(out, kMfccDim);
  for (int t = 0; t < mfcc.frames.rows(); ++t)
    for (int j = 0; j < kMfccDim; ++j)
      detail::put_f32le(out, static_cast<float>(mfcc.frames(t, j)));
  detail::put_u32le(out, kProsodyDim);
  for (int j = 0; j < kProsodyDim; ++j)
    detail::put_f32le(out, static_cast<float>(prosody.values[j]));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write feature file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write: " + path);
}

inline std::pair<MfccSequence, ProsodyVector> read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const unsigned char* end = p + bytes.size();
  if (bytes.size() < 4 || std::memcmp(p, "DCF1", 4) != 0)
    throw FormatError("bad feature file magic: " + path);
  p += 4;
  const std::uint32_t t_count = detail::get_u32le(p, end);
  const std::uint32_t mfcc_dim = detail::get_u32le(p, end);
  if (mfcc_dim != kMfccDim)
    throw FormatError("feature file MFCC dim " + std::to_string(mfcc_dim) + ", expected 39");
  MfccSequence mfcc;
  mfcc.frames.resize(t_count, kMfccDim);
  for (std::uint32_t t = 0; t < t_count; ++t)
    for (int j = 0; j < kMfccDim; ++j) mfcc.frames(t, j) = detail::get_f32le(p, end);
  const std::uint32_t pros_dim = detail::get_u32le(p, end);
  if (pros_dim != kProsodyDim)
    throw FormatError("feature file prosody dim " + std::to_string(pros_dim) + ", expected 35");
  ProsodyVector prosody;
  prosody.values.resize(kProsodyDim);
  for (int j = 0; j < kProsodyDim; ++j) prosody.values[j] = detail::get_f32le(p, end);
  mfcc.validate();
  prosody.validate();
  return {std::move(mfcc), std::move(prosody)};
}

}  // namespace dualcoder
