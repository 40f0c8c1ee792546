#include "anomalyhop/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "anomalyhop/errors.hpp"

namespace anomalyhop::evalx {

RocResult auc_roc(const std::vector<double>& scores,
                  const std::vector<int>& labels, bool with_curve) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc_roc: length mismatch");
  const size_t n = scores.size();
  long pos = 0;
  for (int l : labels) pos += l ? 1 : 0;
  long neg = static_cast<long>(n) - pos;
  if (pos == 0 || neg == 0)
    throw UndefinedMetricError("auc_roc: both classes must be present");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney rank sum with midranks for ties.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t t = i; t <= j; ++t)
      if (labels[order[t]]) rank_sum_pos += midrank;
    i = j + 1;
  }
  double u = rank_sum_pos - 0.5 * static_cast<double>(pos) * (pos + 1);

  RocResult res;
  res.n_positive = pos;
  res.n_negative = neg;
  res.auc = u / (static_cast<double>(pos) * static_cast<double>(neg));

  if (with_curve) {
    // Sweep thresholds from high to low, one point per distinct score.
    res.curve.emplace_back(0.0, 0.0);
    long tp = 0, fp = 0;
    for (size_t t = n; t > 0;) {
      size_t j = t;
      double s = scores[order[t - 1]];
      while (j > 0 && scores[order[j - 1]] == s) {
        if (labels[order[j - 1]]) ++tp; else ++fp;
        --j;
      }
      t = j;
      res.curve.emplace_back(static_cast<double>(fp) / neg,
                             static_cast<double>(tp) / pos);
    }
  }
  return res;
}

RocResult evaluate_class(
    const std::vector<std::pair<AnomalyMap, ImageTensor>>& per_image) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& [map, mask] : per_image) {
    if (map.height != mask.height || map.width != mask.width ||
        mask.channels != 1)
      throw std::invalid_argument("evaluate_class: map/mask dims differ");
    for (int r = 0; r < map.height; ++r)
      for (int c = 0; c < map.width; ++c) {
        scores.push_back(map.at(r, c));
        labels.push_back(mask.at(r, c, 0) > 0.5f ? 1 : 0);
      }
  }
  return auc_roc(scores, labels);
}

Category mvtec_category(const std::string& class_name) {
  static const char* textures[] = {"carpet", "grid", "leather", "tile", "wood"};
  for (const char* t : textures)
    if (class_name == t) return Category::texture;
  return Category::object;
}

Summary summarize(const std::vector<ClassResult>& results) {
  Summary s;
  double tex_sum = 0, obj_sum = 0, all_sum = 0;
  int tex_n = 0, obj_n = 0;
  std::ostringstream table;
  table << std::left << std::setw(14) << "class" << std::setw(9) << "category"
        << std::right << std::setw(8) << "auc" << std::setw(10) << "images"
        << std::setw(12) << "sec/image" << "\n";
  for (const auto& r : results) {
    bool tex = r.category == Category::texture;
    (tex ? tex_sum : obj_sum) += r.auc;
    (tex ? tex_n : obj_n) += 1;
    all_sum += r.auc;
    std::string cat = tex ? "texture" : "object";
    table << std::left << std::setw(14) << r.class_name << std::setw(9) << cat
          << std::right << std::setw(8) << std::fixed << std::setprecision(3)
          << r.auc << std::setw(10) << r.n_images << std::setw(12)
          << std::setprecision(3) << r.seconds_per_image << "\n";
    std::ostringstream row;
    row << r.class_name << "," << cat << "," << std::setprecision(6) << r.auc
        << "," << r.n_images << "," << r.seconds_per_image;
    s.csv_rows.push_back(row.str());
  }
  s.texture_mean = tex_n ? tex_sum / tex_n : std::nan("");
  s.object_mean = obj_n ? obj_sum / obj_n : std::nan("");
  s.overall_mean = results.empty() ? std::nan("") : all_sum / results.size();
  if (tex_n)
    table << std::left << std::setw(23) << "avg texture" << std::right
          << std::setw(8) << std::setprecision(3) << s.texture_mean << "\n";
  if (obj_n)
    table << std::left << std::setw(23) << "avg object" << std::right
          << std::setw(8) << std::setprecision(3) << s.object_mean << "\n";
  if (!results.empty())
    table << std::left << std::setw(23) << "avg all" << std::right
          << std::setw(8) << std::setprecision(3) << s.overall_mean << "\n";
  s.table = table.str();
  return s;
}

}  // namespace anomalyhop::evalx
