#include "anomalyhop/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "anomalyhop/imageio.hpp"

namespace anomalyhop::anomaly {

AnomalyMap rescale_map(const AnomalyMap& map, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("rescale_map: output dims must be >= 1");
  if (out_h == map.height && out_w == map.width) return map;

  // Reuse the image resampler; scores fit in double but the sampling
  // convention must stay identical, so go through the same kernel.
  AnomalyMap out(out_h, out_w, map.hop_index);
  double sy = static_cast<double>(map.height) / out_h;
  double sx = static_cast<double>(map.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int ya = std::clamp(y0, 0, map.height - 1);
    int yb = std::clamp(y0 + 1, 0, map.height - 1);
    for (int c = 0; c < out_w; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int xa = std::clamp(x0, 0, map.width - 1);
      int xb = std::clamp(x0 + 1, 0, map.width - 1);
      double top = (1.0 - wx) * map.at(ya, xa) + wx * map.at(ya, xb);
      double bot = (1.0 - wx) * map.at(yb, xa) + wx * map.at(yb, xb);
      out.at(r, c) = (1.0 - wy) * top + wy * bot;
    }
  }
  return out;
}

AnomalyMap gaussian_smooth(const AnomalyMap& map, double sigma) {
  if (sigma <= 0.0) return map;
  int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kern(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kern[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kern[i + radius];
  }
  for (auto& v : kern) v /= sum;

  auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
  AnomalyMap tmp(map.height, map.width, map.hop_index);
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kern[i + radius] * map.at(r, clampi(c + i, map.width));
      tmp.at(r, c) = acc;
    }
  AnomalyMap out(map.height, map.width, map.hop_index);
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kern[i + radius] * tmp.at(clampi(r + i, map.height), c);
      out.at(r, c) = acc;
    }
  return out;
}

AnomalyMap fuse(const std::vector<AnomalyMap>& maps, const FusionConfig& cfg) {
  if (maps.empty()) throw std::invalid_argument("fuse: no maps");
  if (cfg.weights.size() != maps.size())
    throw std::invalid_argument("fuse: weight/map count mismatch");
  double wsum = 0.0;
  for (double w : cfg.weights) {
    if (w < 0.0) throw std::invalid_argument("fuse: negative weight");
    wsum += w;
  }
  if (wsum <= 0.0) throw std::invalid_argument("fuse: all weights zero");
  if (!cfg.norm_divisors.empty() && cfg.norm_divisors.size() != maps.size())
    throw std::invalid_argument("fuse: divisor count mismatch");

  AnomalyMap out(cfg.target_size, cfg.target_size, 0);
  for (size_t h = 0; h < maps.size(); ++h) {
    if (cfg.weights[h] == 0.0) continue;
    AnomalyMap scaled = rescale_map(maps[h], cfg.target_size, cfg.target_size);
    double div = 1.0;
    if (cfg.normalize_per_hop && !cfg.norm_divisors.empty() &&
        cfg.norm_divisors[h] > 0.0)
      div = cfg.norm_divisors[h];
    double w = cfg.weights[h] / wsum;
    for (size_t i = 0; i < out.scores.size(); ++i)
      out.scores[i] += w * scaled.scores[i] / div;
  }
  if (cfg.smooth_sigma > 0.0) out = gaussian_smooth(out, cfg.smooth_sigma);
  return out;
}

ImageTensor segment(const AnomalyMap& map, double threshold) {
  ImageTensor out(map.height, map.width, 1);
  for (size_t i = 0; i < map.scores.size(); ++i)
    out.data[i] = map.scores[i] > threshold ? 1.f : 0.f;
  return out;
}

namespace {

ImageTensor normalized_gray(const AnomalyMap& map) {
  double lo = *std::min_element(map.scores.begin(), map.scores.end());
  double hi = *std::max_element(map.scores.begin(), map.scores.end());
  double range = hi - lo;
  ImageTensor img(map.height, map.width, 1);
  for (size_t i = 0; i < map.scores.size(); ++i)
    img.data[i] = range > 0.0
                      ? static_cast<float>((map.scores[i] - lo) / range)
                      : 0.f;
  return img;
}

}  // namespace

void save_heatmap_png(const AnomalyMap& map,
                      const std::filesystem::path& path) {
  imageio::save_png(normalized_gray(map), path);
}

void save_overlay_png(const AnomalyMap& map, const ImageTensor& image,
                      const std::filesystem::path& path) {
  ImageTensor heat = normalized_gray(map);
  if (heat.height != image.height || heat.width != image.width)
    heat = imageio::resize_bilinear(heat, image.height, image.width);

  ImageTensor out(image.height, image.width, 3);
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) {
      float g = image.channels >= 3
                    ? 0.299f * image.at(r, c, 0) + 0.587f * image.at(r, c, 1) +
                          0.114f * image.at(r, c, 2)
                    : image.at(r, c, 0);
      float h = heat.at(r, c, 0);
      // Heat in red, base image in luma, blended at 0.5.
      out.at(r, c, 0) = 0.5f * g + 0.5f * h;
      out.at(r, c, 1) = 0.5f * g;
      out.at(r, c, 2) = 0.5f * g + 0.5f * (1.f - h) * 0.25f;
    }
  imageio::save_png(out, path);
}

}  // namespace anomalyhop::anomaly
