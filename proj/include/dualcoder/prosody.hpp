#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "dualcoder/dsp.hpp"
#include "dualcoder/error.hpp"
#include "dualcoder/mfcc.hpp"

namespace dualcoder {

inline constexpr int kProsodyDim = 35;
inline constexpr double kF0MinHz = 50.0;
inline constexpr double kF0MaxHz = 500.0;
// Normalized autocorrelation peak height above which a frame counts as voiced.
inline constexpr double kVoicingThreshold = 0.45;

// 35 utterance-level statistics in five 7-value blocks:
//   [F0 contour | voicing probability | loudness contour | F0 delta | loudness delta]
// each block being (mean, std, min, max, range, slope, IQR). F0 blocks are
// computed over voiced frames only; the rest over all frames.
struct ProsodyVector {
  Eigen::VectorXd values;  // 35

  void validate() const {
    if (values.size() != kProsodyDim) throw ShapeError("ProsodyVector: dimension must be 35");
    if (!values.allFinite()) throw ValueError("ProsodyVector: non-finite entry");
  }
};

namespace detail {

struct F0Estimate {
  double f0 = 0.0;
  double voicing = 0.0;
};

// Autocorrelation peak search over the 50..500 Hz lag range on a raw
// (unwindowed) frame, with parabolic interpolation of the peak lag. The
// normalized peak height doubles as the voicing probability.
inline F0Estimate estimate_f0(const Eigen::VectorXd& frame, int sample_rate) {
  const int w = static_cast<int>(frame.size());
  const double energy = frame.squaredNorm();
  if (energy < kLogFloor) return {};

  const int lag_min = std::max(2, static_cast<int>(std::floor(sample_rate / kF0MaxHz)));
  const int lag_max = std::min(w - 1, static_cast<int>(std::ceil(sample_rate / kF0MinHz)));
  if (lag_min >= lag_max) return {};

  auto norm_acf = [&](int lag) {
    double num = 0.0, e0 = 0.0, e1 = 0.0;
    for (int n = 0; n + lag < w; ++n) {
      num += frame[n] * frame[n + lag];
      e0 += frame[n] * frame[n];
      e1 += frame[n + lag] * frame[n + lag];
    }
    const double denom = std::sqrt(e0 * e1);
    return denom < 1e-12 ? 0.0 : num / denom;
  };

  std::vector<double> acf(static_cast<std::size_t>(lag_max - lag_min + 1));
  double max_r = -2.0;
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    const double r = norm_acf(lag);
    acf[static_cast<std::size_t>(lag - lag_min)] = r;
    max_r = std::max(max_r, r);
  }

  // A periodic signal peaks at every multiple of its period; take the
  // smallest local maximum within 15% of the global peak to avoid octave
  // errors, falling back to the global argmax.
  int best_lag = -1;
  double best_r = max_r;
  auto at = [&](int lag) { return acf[static_cast<std::size_t>(lag - lag_min)]; };
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    const double r = at(lag);
    if (r < 0.85 * max_r) continue;
    const bool left_ok = lag == lag_min || at(lag - 1) <= r;
    const bool right_ok = lag == lag_max || at(lag + 1) <= r;
    if (left_ok && right_ok) {
      best_lag = lag;
      best_r = r;
      break;
    }
  }
  if (best_lag < 0) {
    for (int lag = lag_min; lag <= lag_max; ++lag)
      if (at(lag) == max_r) {
        best_lag = lag;
        break;
      }
  }

  double refined = static_cast<double>(best_lag);
  if (best_lag > lag_min && best_lag < lag_max) {
    const double rm = acf[static_cast<std::size_t>(best_lag - 1 - lag_min)];
    const double r0 = best_r;
    const double rp = acf[static_cast<std::size_t>(best_lag + 1 - lag_min)];
    const double curv = rm - 2.0 * r0 + rp;
    if (std::abs(curv) > 1e-12) {
      double shift = 0.5 * (rm - rp) / curv;
      refined += std::clamp(shift, -0.5, 0.5);
    }
  }

  F0Estimate est;
  est.voicing = std::clamp(best_r, 0.0, 1.0);
  est.f0 = sample_rate / refined;
  return est;
}

// (mean, std, min, max, range, slope, IQR) of values[idx] with the population
// std, a least-squares slope against the frame index, and linearly
// interpolated quartiles. An empty index set yields all zeros.
inline void write_stats_block(const std::vector<double>& values, const std::vector<int>& idx,
                              Eigen::VectorXd& out, int offset) {
  if (idx.empty()) {
    out.segment(offset, 7).setZero();
    return;
  }
  const double n = static_cast<double>(idx.size());
  double mean = 0.0;
  for (int i : idx) mean += values[static_cast<std::size_t>(i)];
  mean /= n;
  double var = 0.0, mn = values[static_cast<std::size_t>(idx[0])], mx = mn;
  for (int i : idx) {
    const double v = values[static_cast<std::size_t>(i)];
    var += (v - mean) * (v - mean);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  var /= n;

  double tbar = 0.0;
  for (int i : idx) tbar += i;
  tbar /= n;
  double cov = 0.0, tvar = 0.0;
  for (int i : idx) {
    cov += (i - tbar) * (values[static_cast<std::size_t>(i)] - mean);
    tvar += (i - tbar) * (i - tbar);
  }
  const double slope = tvar > 0.0 ? cov / tvar : 0.0;

  std::vector<double> sorted;
  sorted.reserve(idx.size());
  for (int i : idx) sorted.push_back(values[static_cast<std::size_t>(i)]);
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&sorted](double p) {
    const double pos = p * (static_cast<double>(sorted.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return sorted[lo] + (pos - std::floor(pos)) * (sorted[hi] - sorted[lo]);
  };

  out[offset + 0] = mean;
  out[offset + 1] = std::sqrt(var);
  out[offset + 2] = mn;
  out[offset + 3] = mx;
  out[offset + 4] = mx - mn;
  out[offset + 5] = slope;
  out[offset + 6] = quantile(0.75) - quantile(0.25);
}

}  // namespace detail

inline ProsodyVector compute_prosody(const AudioBuffer& audio, const FrameSpec& spec) {
  // F0/voicing use raw frames (windowing biases the autocorrelation peak);
  // loudness uses the same Hamming frames as the MFCC log-energy.
  const auto raw = detail::cut_frames(audio, spec, false);
  const auto windowed = detail::cut_frames(audio, spec, true);
  const int t_count = static_cast<int>(raw.size());

  std::vector<double> f0(static_cast<std::size_t>(t_count));
  std::vector<double> voicing(static_cast<std::size_t>(t_count));
  std::vector<double> loudness(static_cast<std::size_t>(t_count));
  std::vector<int> all_frames(static_cast<std::size_t>(t_count));
  std::vector<int> voiced_frames;
  for (int t = 0; t < t_count; ++t) {
    const auto est = detail::estimate_f0(raw[static_cast<std::size_t>(t)], audio.sample_rate);
    const bool voiced = est.voicing >= kVoicingThreshold;
    f0[static_cast<std::size_t>(t)] = voiced ? est.f0 : 0.0;
    voicing[static_cast<std::size_t>(t)] = est.voicing;
    loudness[static_cast<std::size_t>(t)] =
        std::log(std::max(windowed[static_cast<std::size_t>(t)].squaredNorm(), kLogFloor));
    all_frames[static_cast<std::size_t>(t)] = t;
    if (voiced) voiced_frames.push_back(t);
  }

  auto contour_delta = [t_count](const std::vector<double>& c) {
    Eigen::MatrixXd m(t_count, 1);
    for (int t = 0; t < t_count; ++t) m(t, 0) = c[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd d = compute_deltas(m, kDeltaWindow);
    std::vector<double> out(static_cast<std::size_t>(t_count));
    for (int t = 0; t < t_count; ++t) out[static_cast<std::size_t>(t)] = d(t, 0);
    return out;
  };
  const std::vector<double> f0_delta = contour_delta(f0);
  const std::vector<double> loudness_delta = contour_delta(loudness);

  ProsodyVector out;
  out.values.resize(kProsodyDim);
  detail::write_stats_block(f0, voiced_frames, out.values, 0);
  detail::write_stats_block(voicing, all_frames, out.values, 7);
  detail::write_stats_block(loudness, all_frames, out.values, 14);
  detail::write_stats_block(f0_delta, voiced_frames, out.values, 21);
  detail::write_stats_block(loudness_delta, all_frames, out.values, 28);
  out.validate();
  return out;
}

}  // namespace dualcoder
