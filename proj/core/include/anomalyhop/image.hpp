#pragma once

#include <cassert>
#include <cstddef>
#include <string>
#include <vector>

namespace anomalyhop {

/// Dense H x W x C grid of real values, row-major (row, column, channel).
/// The universal carrier between pipeline stages.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c, float fill = 0.f)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {}

  float& at(int r, int c, int ch) {
    return data[(static_cast<size_t>(r) * width + c) * channels + ch];
  }
  float at(int r, int c, int ch) const {
    return data[(static_cast<size_t>(r) * width + c) * channels + ch];
  }

  size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
};

enum class Label { normal, anomalous };

struct LabeledSample {
  ImageTensor image;
  ImageTensor mask;  // empty when absent; 1 channel, values in {0,1}
  Label label = Label::normal;
  std::string class_name;
  std::string defect_name;  // empty for normal samples

  bool has_mask() const { return !mask.empty(); }
};

struct DatasetSplit {
  std::vector<LabeledSample> train;  // all normal
  std::vector<LabeledSample> test;
};

}  // namespace anomalyhop
