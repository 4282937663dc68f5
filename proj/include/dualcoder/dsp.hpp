#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "dualcoder/error.hpp"
#include "dualcoder/wav.hpp"

namespace dualcoder {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Short-time analysis grid: 25 ms Hamming frames every 10 ms by default.
struct FrameSpec {
  int frame_len_ms = 25;
  int hop_ms = 10;

  void validate() const {
    if (!(frame_len_ms > hop_ms && hop_ms > 0))
      throw ValueError("FrameSpec: need frame_len_ms > hop_ms > 0");
  }

  int frame_samples(int sample_rate) const {
    return static_cast<int>((static_cast<std::int64_t>(sample_rate) * frame_len_ms) / 1000);
  }
  int hop_samples(int sample_rate) const {
    return static_cast<int>((static_cast<std::int64_t>(sample_rate) * hop_ms) / 1000);
  }
};

// w[n] = 0.54 - 0.46 cos(2 pi n / (W-1)); a single-sample window is 1.
inline Eigen::VectorXd hamming_window(int length) {
  if (length < 1) throw ValueError("hamming_window: length must be >= 1");
  Eigen::VectorXd w(length);
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int n = 0; n < length; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * kPi * n / (length - 1));
  return w;
}

inline int frame_count(std::size_t num_samples, int frame_samples, int hop_samples) {
  return static_cast<int>((num_samples - static_cast<std::size_t>(frame_samples)) /
                          static_cast<std::size_t>(hop_samples)) + 1;
}

namespace detail {

inline std::vector<Eigen::VectorXd> cut_frames(const AudioBuffer& audio, const FrameSpec& spec,
                                               bool apply_window) {
  spec.validate();
  const int w = spec.frame_samples(audio.sample_rate);
  const int h = spec.hop_samples(audio.sample_rate);
  if (audio.samples.size() < static_cast<std::size_t>(w))
    throw ValueError("audio too short: " + std::to_string(audio.samples.size()) +
                     " samples, one frame needs " + std::to_string(w));
  const int t = frame_count(audio.samples.size(), w, h);
  Eigen::VectorXd window;
  if (apply_window) window = hamming_window(w);
  std::vector<Eigen::VectorXd> frames;
  frames.reserve(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    Eigen::VectorXd f(w);
    const double* src = audio.samples.data() + static_cast<std::size_t>(i) * h;
    for (int n = 0; n < w; ++n) f[n] = src[n];
    if (apply_window) f.array() *= window.array();
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace detail

// Hamming-windowed frames; frame count T = floor((L - W) / H) + 1.
inline std::vector<Eigen::VectorXd> frame_signal(const AudioBuffer& audio, const FrameSpec& spec) {
  return detail::cut_frames(audio, spec, true);
}

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT. Size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ValueError("fft: size must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// One-sided power spectrum |X_k|^2, k = 0..nfft/2, of a frame zero-padded to
// nfft. No 1/N normalization is applied, so Parseval's relation reads
//   sum_n x[n]^2 = (P_0 + P_{nfft/2} + 2 * sum_{0<k<nfft/2} P_k) / nfft.
inline Eigen::VectorXd power_spectrum(const Eigen::VectorXd& frame, int nfft) {
  if (nfft < frame.size()) throw ValueError("power_spectrum: nfft smaller than frame");
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(nfft), {0.0, 0.0});
  for (int i = 0; i < frame.size(); ++i) buf[static_cast<std::size_t>(i)] = {frame[i], 0.0};
  fft_inplace(buf);
  Eigen::VectorXd power(nfft / 2 + 1);
  for (int k = 0; k <= nfft / 2; ++k) power[k] = std::norm(buf[static_cast<std::size_t>(k)]);
  return power;
}

}  // namespace dualcoder
