#pragma once

#include <cstddef>
#include <vector>

namespace anomalyhop {

/// Spatial grid of nonnegative anomaly scores. hop_index is 0 for fused maps.
struct AnomalyMap {
  int height = 0;
  int width = 0;
  int hop_index = 0;
  std::vector<double> scores;  // row-major

  AnomalyMap() = default;
  AnomalyMap(int h, int w, int hop = 0)
      : height(h), width(w), hop_index(hop),
        scores(static_cast<size_t>(h) * w, 0.0) {}

  double at(int r, int c) const { return scores[static_cast<size_t>(r) * width + c]; }
  double& at(int r, int c) { return scores[static_cast<size_t>(r) * width + c]; }
};

}  // namespace anomalyhop
