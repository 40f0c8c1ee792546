#pragma once

#include <vector>

#include "anomalyhop/bundle.hpp"

namespace anomalyhop {

/// Fit pipeline + normality models + normalization percentiles from normal
/// training images, then freeze the bundle. Deterministic for fixed inputs.
ModelBundle train_model(const ClassConfig& cfg,
                        const std::vector<ImageTensor>& train_images);

struct ScoreOutput {
  std::vector<AnomalyMap> hop_maps;  // one per used hop, ascending
  AnomalyMap fused;
  double seconds = 0.0;  // transform + scoring + fusion, no file I/O
};

/// Full inference for one image (already resized to config.resize).
/// self_reference models are fitted from the image's own feature maps.
ScoreOutput score_image(const ModelBundle& bundle, const ImageTensor& image);

}  // namespace anomalyhop
