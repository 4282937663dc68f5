#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "dualcoder/error.hpp"

namespace dualcoder {

// Fixed class order used everywhere: files, reports, confusion matrices.
inline const std::vector<std::string> kClassNames = {"angry", "happy", "sad", "neutral"};
inline constexpr int kNumClasses = 4;

inline int label_index(const std::string& name) {
  auto it = std::find(kClassNames.begin(), kClassNames.end(), name);
  if (it == kClassNames.end())
    throw ValueError("unknown label '" + name + "' (expected angry|happy|sad|neutral)");
  return static_cast<int>(it - kClassNames.begin());
}

}  // namespace dualcoder
