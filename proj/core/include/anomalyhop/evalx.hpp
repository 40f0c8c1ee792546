#pragma once

#include <map>
#include <string>
#include <vector>

#include "anomalyhop/anomaly_map.hpp"
#include "anomalyhop/image.hpp"

namespace anomalyhop::evalx {

struct RocResult {
  double auc = 0.0;
  long n_positive = 0;
  long n_negative = 0;
  std::vector<std::pair<double, double>> curve;  // (fpr, tpr), optional
};

/// Rank-statistic (Mann-Whitney) AUC with midrank tie handling; equals the
/// trapezoidal area under the ROC curve. Both classes must be present.
RocResult auc_roc(const std::vector<double>& scores,
                  const std::vector<int>& labels, bool with_curve = false);

/// Pixel-pooled AUC over all test images of a class: scores and mask labels
/// of every pixel are pooled, then one AUC is computed.
RocResult evaluate_class(
    const std::vector<std::pair<AnomalyMap, ImageTensor>>& per_image);

enum class Category { texture, object };

struct ClassResult {
  std::string class_name;
  Category category = Category::texture;
  double auc = 0.0;
  int n_images = 0;
  double seconds_per_image = 0.0;
};

struct Summary {
  double texture_mean = 0.0;  // NaN when category absent
  double object_mean = 0.0;
  double overall_mean = 0.0;
  std::string table;  // aligned text rendering
  std::vector<std::string> csv_rows;  // class,category,auc,n_images,seconds_per_image
};

Summary summarize(const std::vector<ClassResult>& results);

/// MVTec AD category of a class name; unknown classes default to object.
Category mvtec_category(const std::string& class_name);

}  // namespace anomalyhop::evalx
