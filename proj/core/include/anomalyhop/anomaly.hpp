#pragma once

#include <filesystem>
#include <vector>

#include "anomalyhop/anomaly_map.hpp"
#include "anomalyhop/image.hpp"

namespace anomalyhop::anomaly {

struct FusionConfig {
  std::vector<double> weights;  // per hop, nonnegative, at least one > 0
  int target_size = 224;
  double smooth_sigma = 0.0;
  bool normalize_per_hop = false;
  /// Training-set 99th-percentile score per hop, used as divisors when
  /// normalize_per_hop is on. Empty means divisors of 1.
  std::vector<double> norm_divisors;
};

/// Bilinear rescale, same sampling convention as imageio::resize_bilinear.
AnomalyMap rescale_map(const AnomalyMap& map, int out_h, int out_w);

/// Rescale every hop map to target_size, optionally divide by the per-hop
/// divisor, weighted-average, then Gaussian-smooth if smooth_sigma > 0
/// (kernel truncated at 4 sigma, edge-clamped).
AnomalyMap fuse(const std::vector<AnomalyMap>& maps, const FusionConfig& cfg);

/// Binary mask: 1 where score > threshold.
ImageTensor segment(const AnomalyMap& map, double threshold);

/// Separable Gaussian blur, truncation radius ceil(4*sigma), edge-clamped.
AnomalyMap gaussian_smooth(const AnomalyMap& map, double sigma);

/// 8-bit grayscale PNG of the map, min-max normalized per image to [0,255].
void save_heatmap_png(const AnomalyMap& map, const std::filesystem::path& path);

/// Heatmap alpha-blended at 0.5 over the input image, written as PNG.
void save_overlay_png(const AnomalyMap& map, const ImageTensor& image,
                      const std::filesystem::path& path);

}  // namespace anomalyhop::anomaly
