#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "dualcoder/error.hpp"

namespace dualcoder {

// Mono audio, samples normalized to [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 0;

  void validate() const {
    if (samples.empty()) throw ValueError("AudioBuffer: empty audio");
    if (sample_rate < 8000)
      throw ValueError("AudioBuffer: sample rate must be >= 8000 Hz, got " +
                       std::to_string(sample_rate));
    for (double s : samples)
      if (!std::isfinite(s)) throw ValueError("AudioBuffer: non-finite sample");
  }
};

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void append_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void append_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace detail

// Reads a PCM WAV file: 16-bit integer or 32-bit float, mono or stereo.
// Stereo is downmixed by channel mean; integer samples are scaled by 2^-15.
inline AudioBuffer load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file: " + path);

  std::uint16_t audio_format = 0, num_channels = 0, bits_per_sample = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  // Walk the chunk list; anything other than fmt/data is skipped.
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const char* id = bytes.data() + pos;
    std::uint32_t size = detail::read_u32le(p + pos + 4);
    pos += 8;
    if (pos + size > n) throw FormatError("truncated WAV chunk: " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("fmt chunk too small: " + path);
      audio_format = detail::read_u16le(p + pos);
      num_channels = detail::read_u16le(p + pos + 2);
      sample_rate = detail::read_u32le(p + pos + 4);
      bits_per_sample = detail::read_u16le(p + pos + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = p + pos;
      data_size = size;
    }
    pos += size + (size & 1);  // chunks are word-aligned
  }

  if (audio_format == 0) throw FormatError("missing fmt chunk: " + path);
  if (data == nullptr) throw FormatError("missing data chunk: " + path);
  if (num_channels != 1 && num_channels != 2)
    throw FormatError("unsupported channel count " + std::to_string(num_channels) + ": " + path);

  const bool pcm16 = (audio_format == 1 && bits_per_sample == 16);
  const bool f32 = (audio_format == 3 && bits_per_sample == 32);
  if (!pcm16 && !f32)
    throw FormatError("unsupported codec (format " + std::to_string(audio_format) + ", " +
                      std::to_string(bits_per_sample) + " bit): " + path);

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per_sample * num_channels;
  const std::size_t num_frames = data_size / frame_bytes;
  if (num_frames == 0) throw ValueError("empty audio: " + path);

  AudioBuffer out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.samples.resize(num_frames);
  for (std::size_t i = 0; i < num_frames; ++i) {
    double acc = 0.0;
    for (unsigned c = 0; c < num_channels; ++c) {
      const unsigned char* sp = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        std::int16_t v = static_cast<std::int16_t>(detail::read_u16le(sp));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        std::uint32_t u = detail::read_u32le(sp);
        float f;
        std::memcpy(&f, &u, 4);
        acc += static_cast<double>(f);
      }
    }
    out.samples[i] = acc / num_channels;
  }
  out.validate();
  return out;
}

// Writes mono 16-bit PCM. Values are clamped to [-1, 1] and scaled by 2^15
// (the inverse of the loader's scaling), so 0.5 round-trips to 16384.
inline void write_wav(const std::string& path, const AudioBuffer& audio) {
  std::string out;
  const std::uint32_t num_samples = static_cast<std::uint32_t>(audio.samples.size());
  const std::uint32_t data_size = num_samples * 2;
  out.reserve(44 + data_size);
  out += "RIFF";
  detail::append_u32le(out, 36 + data_size);
  out += "WAVEfmt ";
  detail::append_u32le(out, 16);
  detail::append_u16le(out, 1);  // PCM
  detail::append_u16le(out, 1);  // mono
  detail::append_u32le(out, static_cast<std::uint32_t>(audio.sample_rate));
  detail::append_u32le(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  detail::append_u16le(out, 2);   // block align
  detail::append_u16le(out, 16);  // bits per sample
  out += "data";
  detail::append_u32le(out, data_size);
  for (double s : audio.samples) {
    double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    detail::append_u16le(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write WAV file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write: " + path);
}

}  // namespace dualcoder
