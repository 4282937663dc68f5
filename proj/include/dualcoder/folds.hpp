#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "dualcoder/data.hpp"
#include "dualcoder/error.hpp"
#include "dualcoder/rng.hpp"

namespace dualcoder {

// Train/dev/test shares out of 10.
struct SplitRatios {
  double train = 8.0;
  double dev = 0.5;
  double test = 1.5;
};

struct FoldSplit {
  int fold = 0;
  std::vector<std::size_t> train, dev, test;  // indices into the record list
};

namespace detail {

// Largest-remainder apportionment of `total` across groups proportional to
// their sizes; keeps every group within one sample of its exact quota.
inline std::vector<int> apportion(const std::vector<int>& group_sizes, int total) {
  const double n = static_cast<double>(std::accumulate(group_sizes.begin(), group_sizes.end(), 0));
  std::vector<int> base(group_sizes.size());
  std::vector<std::pair<double, std::size_t>> fractions;
  int assigned = 0;
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    const double quota = group_sizes[g] * total / n;
    base[g] = static_cast<int>(std::floor(quota + 1e-9));
    assigned += base[g];
    fractions.push_back({quota - base[g], g});
  }
  std::stable_sort(fractions.begin(), fractions.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < total - assigned; ++i) base[fractions[static_cast<std::size_t>(i)].second] += 1;
  return base;
}

}  // namespace detail

// Stratified k-fold rotation. Per class, records are shuffled once (seeded)
// and arranged on a circle; fold f reads its test slice starting at offset
// f*n/k, then its dev slice, and trains on the rest. Global test/dev counts
// are floor-based on the ratios with the remainder going to train, and are
// apportioned across classes by largest remainder, so every split stays
// within one sample of the class's global proportion.
inline std::vector<FoldSplit> split_folds(const std::vector<UtteranceRecord>& records, int k,
                                          const SplitRatios& ratios, std::uint64_t seed) {
  if (k < 2) throw ValueError("split_folds: need k >= 2");
  if (records.size() < static_cast<std::size_t>(k))
    throw ValueError("split_folds: fewer records than folds");

  const double total_ratio = ratios.train + ratios.dev + ratios.test;
  const auto n = static_cast<int>(records.size());
  const int n_test = static_cast<int>(std::floor(n * ratios.test / total_ratio + 1e-9));
  const int n_dev = static_cast<int>(std::floor(n * ratios.dev / total_ratio + 1e-9));

  // Group record indices by class, shuffled once per class.
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) by_class[records[i].label].push_back(i);
  std::vector<int> class_sizes;
  std::vector<std::vector<std::size_t>> class_orders;
  for (auto& [label, idx] : by_class) {
    Rng rng(derive_seed(seed, "fold-class-" + std::to_string(label)));
    shuffle(idx, rng);
    class_sizes.push_back(static_cast<int>(idx.size()));
    class_orders.push_back(idx);
  }

  std::vector<int> test_alloc = detail::apportion(class_sizes, n_test);
  std::vector<int> dev_alloc = detail::apportion(class_sizes, n_dev);
  for (std::size_t g = 0; g < class_sizes.size(); ++g) {
    if (test_alloc[g] + dev_alloc[g] > class_sizes[g])
      dev_alloc[g] = class_sizes[g] - test_alloc[g];
  }

  std::vector<FoldSplit> folds;
  for (int f = 0; f < k; ++f) {
    FoldSplit split;
    split.fold = f;
    for (std::size_t g = 0; g < class_orders.size(); ++g) {
      const auto& order = class_orders[g];
      const int nc = static_cast<int>(order.size());
      const int start = static_cast<int>(static_cast<long>(f) * nc / k);
      std::vector<bool> held(static_cast<std::size_t>(nc), false);
      for (int i = 0; i < test_alloc[g]; ++i) {
        const int pos = (start + i) % nc;
        split.test.push_back(order[static_cast<std::size_t>(pos)]);
        held[static_cast<std::size_t>(pos)] = true;
      }
      for (int i = 0; i < dev_alloc[g]; ++i) {
        const int pos = (start + test_alloc[g] + i) % nc;
        split.dev.push_back(order[static_cast<std::size_t>(pos)]);
        held[static_cast<std::size_t>(pos)] = true;
      }
      for (int i = 0; i < nc; ++i)
        if (!held[static_cast<std::size_t>(i)]) split.train.push_back(order[static_cast<std::size_t>(i)]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.dev.begin(), split.dev.end());
    std::sort(split.test.begin(), split.test.end());
    folds.push_back(std::move(split));
  }
  return folds;
}

// Session-grouped variant for speaker-independence experiments: whole
// sessions rotate into the test set; the dev slice is carved stratified from
// the remaining records at dev/(train+dev).
inline std::vector<FoldSplit> split_folds_by_session(const std::vector<UtteranceRecord>& records,
                                                     int k, const SplitRatios& ratios,
                                                     std::uint64_t seed) {
  if (k < 2) throw ValueError("split_folds: need k >= 2");
  std::map<std::string, std::vector<std::size_t>> by_session;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].session.empty())
      throw ValueError("split_folds_by_session: record '" + records[i].id + "' has no session id");
    by_session[records[i].session].push_back(i);
  }
  if (by_session.size() < static_cast<std::size_t>(k))
    throw ValueError("split_folds_by_session: fewer sessions than folds");

  std::vector<std::string> sessions;
  for (const auto& [s, idx] : by_session) sessions.push_back(s);
  Rng rng(derive_seed(seed, "fold-sessions"));
  shuffle(sessions, rng);

  std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) folds[static_cast<std::size_t>(f)].fold = f;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    auto& test = folds[s % static_cast<std::size_t>(k)].test;
    const auto& idx = by_session[sessions[s]];
    test.insert(test.end(), idx.begin(), idx.end());
  }
  for (int f = 0; f < k; ++f) {
    FoldSplit& split = folds[static_cast<std::size_t>(f)];
    std::vector<bool> in_test(records.size(), false);
    for (auto i : split.test) in_test[i] = true;
    std::map<int, std::vector<std::size_t>> rest_by_class;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (!in_test[i]) rest_by_class[records[i].label].push_back(i);
    std::vector<int> sizes;
    std::vector<std::vector<std::size_t>> orders;
    for (auto& [label, idx] : rest_by_class) {
      Rng dev_rng(derive_seed(seed, "fold-dev-" + std::to_string(f) + "-" + std::to_string(label)));
      shuffle(idx, dev_rng);
      sizes.push_back(static_cast<int>(idx.size()));
      orders.push_back(idx);
    }
    std::size_t n_rest = 0;
    for (int s2 : sizes) n_rest += static_cast<std::size_t>(s2);
    const int n_dev = static_cast<int>(
        std::floor(static_cast<double>(n_rest) * ratios.dev / (ratios.train + ratios.dev) + 1e-9));
    std::vector<int> dev_alloc = detail::apportion(sizes, n_dev);
    for (std::size_t g = 0; g < orders.size(); ++g) {
      for (int i = 0; i < dev_alloc[g]; ++i) split.dev.push_back(orders[g][static_cast<std::size_t>(i)]);
      for (int i = dev_alloc[g]; i < sizes[g]; ++i)
        split.train.push_back(orders[g][static_cast<std::size_t>(i)]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.dev.begin(), split.dev.end());
    std::sort(split.test.begin(), split.test.end());
  }
  return folds;
}

}  // namespace dualcoder
