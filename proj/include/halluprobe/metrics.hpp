// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "halluprobe/error.hpp"

namespace halluprobe {

/// Confusion counts with "correct answer" as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline double f1_score(const ConfusionCounts& c) {
  const std::uint64_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 0.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

/// Hard classification rule used during probe evaluation.
inline constexpr double kProbeCutoff = 0.5;

/// Counts predicted-correct (score > cutoff) against 0/1 labels.
template <typename DS, typename DY>
ConfusionCounts confusion_from_scores(const Eigen::MatrixBase<DS>& scores, const Eigen::MatrixBase<DY>& labels,
                                      double cutoff = kProbeCutoff) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "score and label counts differ");
  }
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const bool predicted = scores(i) > cutoff;
    const bool actual = labels(i) == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

}  // namespace halluprobe
