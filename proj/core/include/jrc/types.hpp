#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace jrc {

using FeatureId = std::uint32_t;
using UserId = std::uint64_t;
using ContextKey = std::uint64_t;

// One impression. `features[f]` is the categorical ID of field f; every
// field is present, so the field index is the position in the vector.
struct Sample {
  std::vector<FeatureId> features;
  int label = 0;
  UserId user_id = 0;
  std::int64_t timestamp = 0;
  std::optional<std::uint32_t> gender;
  std::optional<std::uint32_t> domain;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Two-dimensional model output. Index 0 is the nonclick state, index 1 the
// click state. The same layout is used for per-sample gradients w.r.t. the
// logits.
struct LogitPair {
  double nonclick = 0.0;
  double click = 0.0;

  double operator[](int label) const { return label == 1 ? click : nonclick; }
  double& operator[](int label) { return label == 1 ? click : nonclick; }

  friend bool operator==(const LogitPair&, const LogitPair&) = default;
};

}  // namespace jrc
