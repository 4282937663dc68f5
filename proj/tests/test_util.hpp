#pragma once

// Shared helpers for the test suites: independent oracles (kept free of the
// library's FFT/model code paths) and small filesystem utilities.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "dualcoder/nn/tape.hpp"

namespace testutil {

// Brute-force O(N^2) DFT; the reference for the library's FFT power spectrum.
inline Eigen::VectorXd naive_dft_power(const Eigen::VectorXd& frame, int nfft) {
  const double pi = 3.141592653589793238462643383279502884;
  Eigen::VectorXd power(nfft / 2 + 1);
  for (int k = 0; k <= nfft / 2; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int n = 0; n < frame.size(); ++n) {
      const double ang = -2.0 * pi * k * n / nfft;
      acc += frame[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    power[k] = std::norm(acc);
  }
  return power;
}

// Unique scratch directory per test binary run; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      auto candidate = base / (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        break;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Central finite differences against gradients already accumulated in the
// refs' grad sinks. loss_fn re-evaluates the full (batch) loss at the current
// parameter values. Returns the max elementwise relative error, defined as
// |analytic - numeric| / max(1e-6, |analytic|, |numeric|) so that fp noise on
// near-zero gradients does not register as failure.
inline double finite_difference_check(const std::vector<dualcoder::nn::ParamRef>& refs,
                                      const std::function<double()>& loss_fn, double h = 1e-5) {
  double max_rel = 0.0;
  for (const auto& ref : refs) {
    for (Eigen::Index r = 0; r < ref.value->rows(); ++r) {
      for (Eigen::Index c = 0; c < ref.value->cols(); ++c) {
        const double orig = (*ref.value)(r, c);
        (*ref.value)(r, c) = orig + h;
        const double lp = loss_fn();
        (*ref.value)(r, c) = orig - h;
        const double lm = loss_fn();
        (*ref.value)(r, c) = orig;
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = (*ref.grad)(r, c);
        const double rel = std::abs(analytic - numeric) /
                           std::max({1e-6, std::abs(analytic), std::abs(numeric)});
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  return max_rel;
}

inline Eigen::VectorXd sine_wave(double freq_hz, double seconds, int sample_rate,
                                 double amplitude = 0.8) {
  const double pi = 3.141592653589793238462643383279502884;
  const int n = static_cast<int>(seconds * sample_rate);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = amplitude * std::sin(2.0 * pi * freq_hz * i / sample_rate);
  return out;
}

}  // namespace testutil
