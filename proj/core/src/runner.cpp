#include "anomalyhop/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "anomalyhop/errors.hpp"

namespace anomalyhop {

namespace {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double idx = q * (static_cast<double>(values.size()) - 1.0);
  size_t lo = static_cast<size_t>(std::floor(idx));
  size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = idx - static_cast<double>(lo);
  return (1.0 - frac) * values[lo] + frac * values[hi];
}

anomaly::FusionConfig effective_fusion(const ModelBundle& bundle) {
  anomaly::FusionConfig fc = bundle.config.fusion;
  if (fc.weights.empty())
    fc.weights.assign(bundle.config.hops_used.size(), 1.0);
  if (fc.target_size <= 0) fc.target_size = bundle.config.resize;
  fc.norm_divisors = bundle.percentiles;
  return fc;
}

std::vector<AnomalyMap> score_hops(const ModelBundle& bundle,
                                   const std::vector<saab::HopFeatureMap>& maps) {
  std::vector<AnomalyMap> out;
  out.reserve(maps.size());
  for (size_t i = 0; i < maps.size(); ++i) {
    if (bundle.config.model_kind == normality::ModelKind::self_reference) {
      normality::NormalityModel probe;
      probe.kind = normality::ModelKind::self_reference;
      probe.hop_index = maps[i].hop_index;
      probe.epsilon = bundle.config.epsilon;
      out.push_back(normality::score_map(maps[i], probe));
    } else {
      out.push_back(normality::score_map(maps[i], bundle.normality_models[i]));
    }
  }
  return out;
}

}  // namespace

ModelBundle train_model(const ClassConfig& cfg,
                        const std::vector<ImageTensor>& train_images) {
  cfg.validate();
  ModelBundle bundle;
  bundle.config = cfg;
  bundle.pipeline =
      saab::fit_pipeline(train_images, cfg.hop_specs, cfg.energy_threshold);

  // Per-image feature maps at the used hops.
  std::vector<std::vector<saab::HopFeatureMap>> feats(train_images.size());
  for (size_t n = 0; n < train_images.size(); ++n)
    feats[n] = saab::transform(train_images[n], bundle.pipeline, cfg.hops_used);
  const size_t n_hops = cfg.hops_used.size();

  if (cfg.model_kind != normality::ModelKind::self_reference) {
    for (size_t h = 0; h < n_hops; ++h) {
      std::vector<saab::HopFeatureMap> hop_maps;
      hop_maps.reserve(train_images.size());
      for (const auto& f : feats) hop_maps.push_back(f[h]);
      bundle.normality_models.push_back(
          cfg.model_kind == normality::ModelKind::location_aware
              ? normality::fit_location_aware(hop_maps, cfg.epsilon)
              : normality::fit_location_independent(hop_maps, cfg.epsilon));
    }
  }

  // Training-set score percentiles per hop, then the fused 99.9th.
  std::vector<std::vector<AnomalyMap>> train_scores(train_images.size());
  for (size_t n = 0; n < train_images.size(); ++n)
    train_scores[n] = score_hops(bundle, feats[n]);

  bundle.percentiles.resize(n_hops, 0.0);
  for (size_t h = 0; h < n_hops; ++h) {
    std::vector<double> all;
    for (const auto& s : train_scores)
      all.insert(all.end(), s[h].scores.begin(), s[h].scores.end());
    bundle.percentiles[h] = percentile(std::move(all), 0.99);
  }

  anomaly::FusionConfig fc = effective_fusion(bundle);
  std::vector<double> fused_scores;
  for (const auto& s : train_scores) {
    AnomalyMap fused = anomaly::fuse(s, fc);
    fused_scores.insert(fused_scores.end(), fused.scores.begin(),
                        fused.scores.end());
  }
  bundle.fused_p999 = percentile(std::move(fused_scores), 0.999);

  bundle.freeze();
  return bundle;
}

ScoreOutput score_image(const ModelBundle& bundle, const ImageTensor& image) {
  auto t0 = std::chrono::steady_clock::now();
  ScoreOutput out;
  auto feats = saab::transform(image, bundle.pipeline, bundle.config.hops_used);
  out.hop_maps = score_hops(bundle, feats);
  out.fused = anomaly::fuse(out.hop_maps, effective_fusion(bundle));
  out.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

}  // namespace anomalyhop
