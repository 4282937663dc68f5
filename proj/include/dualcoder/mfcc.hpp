#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dualcoder/dsp.hpp"
#include "dualcoder/error.hpp"

namespace dualcoder {

// Energies below this floor are clamped before taking logs, so silence stays
// finite.
inline constexpr double kLogFloor = 1e-10;
inline constexpr int kNumMelFilters = 26;
inline constexpr int kNumCepstra = 12;    // coefficients 1..12, c0 dropped
inline constexpr int kNumStatic = 13;     // 12 cepstra + log-energy
inline constexpr int kMfccDim = 39;       // static + delta + acceleration
inline constexpr int kDeltaWindow = 2;    // regression half-width N

// T x 39 sequential features: 12 cepstra, log-energy, 13 deltas,
// 13 accelerations per frame.
struct MfccSequence {
  Eigen::MatrixXd frames;  // T x 39

  int steps() const { return static_cast<int>(frames.rows()); }

  void validate() const {
    if (frames.rows() < 1) throw ValueError("MfccSequence: need at least one frame");
    if (frames.cols() != kMfccDim)
      throw ShapeError("MfccSequence: second dimension must be 39");
    if (!frames.allFinite()) throw ValueError("MfccSequence: non-finite entry");
  }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank spanning 0 Hz..Nyquist, returned as a dense
// (num_filters x nfft/2+1) weight matrix over one-sided spectrum bins.
// Triangles have unit peak height (no area normalization).
inline Eigen::MatrixXd mel_filterbank(int num_filters, int nfft, int sample_rate) {
  const int bins = nfft / 2 + 1;
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges_hz(static_cast<std::size_t>(num_filters) + 2);
  for (int m = 0; m < num_filters + 2; ++m)
    edges_hz[static_cast<std::size_t>(m)] = mel_to_hz(mel_hi * m / (num_filters + 1));

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(num_filters, bins);
  for (int m = 0; m < num_filters; ++m) {
    const double lo = edges_hz[static_cast<std::size_t>(m)];
    const double mid = edges_hz[static_cast<std::size_t>(m) + 1];
    const double hi = edges_hz[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / nfft;
      if (f > lo && f < mid)
        fb(m, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb(m, k) = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

// DCT-II over a log-energy vector, keeping coefficients first..last and
// applying the common sqrt(2/M) scale.
inline Eigen::VectorXd dct2_coeffs(const Eigen::VectorXd& v, int first, int last) {
  const int m = static_cast<int>(v.size());
  Eigen::VectorXd out(last - first + 1);
  const double scale = std::sqrt(2.0 / m);
  for (int j = first; j <= last; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += v[i] * std::cos(kPi * j * (i + 0.5) / m);
    out[j - first] = scale * acc;
  }
  return out;
}

// Regression deltas with replicated edges:
//   d_t = sum_{n=1..N} n * (c_{t+n} - c_{t-n}) / (2 * sum_{n=1..N} n^2)
inline Eigen::MatrixXd compute_deltas(const Eigen::MatrixXd& seq, int window_n = kDeltaWindow) {
  if (seq.rows() < 1) throw ValueError("compute_deltas: empty sequence");
  if (window_n < 1) throw ValueError("compute_deltas: window must be >= 1");
  const int t_count = static_cast<int>(seq.rows());
  double denom = 0.0;
  for (int n = 1; n <= window_n; ++n) denom += static_cast<double>(n) * n;
  denom *= 2.0;
  Eigen::MatrixXd out(seq.rows(), seq.cols());
  auto clamp_row = [t_count](int t) { return t < 0 ? 0 : (t >= t_count ? t_count - 1 : t); };
  for (int t = 0; t < t_count; ++t) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(seq.cols());
    for (int n = 1; n <= window_n; ++n)
      acc += n * (seq.row(clamp_row(t + n)) - seq.row(clamp_row(t - n)));
    out.row(t) = acc / denom;
  }
  return out;
}

// Full MFCC pipeline: Hamming frames -> one-sided FFT power spectrum
// (nfft = next power of two >= frame length) -> 26 mel filters -> floored log
// -> DCT-II coefficients 1..12 -> post-window log-energy appended -> deltas
// and accelerations appended, 39 features per frame.
inline MfccSequence compute_mfcc(const AudioBuffer& audio, const FrameSpec& spec) {
  const auto frames = frame_signal(audio, spec);
  const int w = spec.frame_samples(audio.sample_rate);
  const int nfft = next_pow2(w);
  const Eigen::MatrixXd fb = mel_filterbank(kNumMelFilters, nfft, audio.sample_rate);
  const int t_count = static_cast<int>(frames.size());

  Eigen::MatrixXd statics(t_count, kNumStatic);
  for (int t = 0; t < t_count; ++t) {
    const Eigen::VectorXd power = power_spectrum(frames[static_cast<std::size_t>(t)], nfft);
    Eigen::VectorXd log_energies = (fb * power).cwiseMax(kLogFloor).array().log();
    statics.block(t, 0, 1, kNumCepstra) = dct2_coeffs(log_energies, 1, kNumCepstra).transpose();
    const double frame_energy = frames[static_cast<std::size_t>(t)].squaredNorm();
    statics(t, kNumCepstra) = std::log(std::max(frame_energy, kLogFloor));
  }

  const Eigen::MatrixXd delta = compute_deltas(statics, kDeltaWindow);
  const Eigen::MatrixXd accel = compute_deltas(delta, kDeltaWindow);
  MfccSequence out;
  out.frames.resize(t_count, kMfccDim);
  out.frames << statics, delta, accel;
  out.validate();
  return out;
}

}  // namespace dualcoder
