#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dualcoder/error.hpp"

namespace dualcoder {

// Support-weighted precision: sum_c (support_c / N) * precision_c with
// precision_c = TP_c / (TP_c + FP_c). A class that is never predicted
// contributes precision 0.
inline double weighted_average_precision(const std::vector<int>& preds,
                                         const std::vector<int>& labels, int num_classes) {
  if (preds.empty() || preds.size() != labels.size())
    throw ValueError("weighted_average_precision: empty or mismatched inputs");
  std::vector<double> tp(static_cast<std::size_t>(num_classes), 0.0);
  std::vector<double> predicted(static_cast<std::size_t>(num_classes), 0.0);
  std::vector<double> support(static_cast<std::size_t>(num_classes), 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], l = labels[i];
    if (p < 0 || p >= num_classes || l < 0 || l >= num_classes)
      throw ValueError("weighted_average_precision: class index out of range");
    predicted[static_cast<std::size_t>(p)] += 1.0;
    support[static_cast<std::size_t>(l)] += 1.0;
    if (p == l) tp[static_cast<std::size_t>(p)] += 1.0;
  }
  double wap = 0.0;
  const auto n = static_cast<double>(labels.size());
  for (int c = 0; c < num_classes; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    const double precision = predicted[cc] > 0.0 ? tp[cc] / predicted[cc] : 0.0;
    wap += (support[cc] / n) * precision;
  }
  return wap;
}

// Row-normalized percentage confusion matrix: row = true class, column =
// predicted class; rows with support sum to 100. A class with no true samples
// leaves an all-zero row (there is nothing to normalize).
inline Eigen::MatrixXd confusion_matrix(const std::vector<int>& preds,
                                        const std::vector<int>& labels, int num_classes) {
  if (preds.empty() || preds.size() != labels.size())
    throw ValueError("confusion_matrix: empty or mismatched inputs");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) counts(labels[i], preds[i]) += 1.0;
  for (int r = 0; r < num_classes; ++r) {
    const double row_sum = counts.row(r).sum();
    if (row_sum > 0.0) counts.row(r) *= 100.0 / row_sum;
  }
  return counts;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

inline MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw ValueError("mean_std: empty input");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(var / static_cast<double>(values.size()));
  return out;
}

}  // namespace dualcoder
