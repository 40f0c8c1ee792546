#pragma once

#include <filesystem>
#include <vector>

#include "anomalyhop/config.hpp"
#include "anomalyhop/normality.hpp"
#include "anomalyhop/saab.hpp"

namespace anomalyhop {

/// Serialized unit of persistence: pipeline + normality models + config.
/// All arrays are stored as little-endian float32; freeze() rounds the
/// in-memory values through float so a save/load round trip is
/// inference-bit-identical.
struct ModelBundle {
  static constexpr int kFormatVersion = 1;

  int format_version = kFormatVersion;
  ClassConfig config;
  saab::HopPipeline pipeline;
  /// One model per used hop, ascending hop order. Empty for
  /// self_reference, which is fitted per query.
  std::vector<normality::NormalityModel> normality_models;
  /// Training-set 99th-percentile fused-scale divisor per used hop.
  std::vector<double> percentiles;
  /// Training-set 99.9th percentile of the fused map, for sanity probes.
  double fused_p999 = 0.0;
  long parameter_count = 0;

  /// Round every stored array through float32.
  void freeze();
  /// Recompute parameter_count from the stored arrays.
  void update_parameter_count();
};

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

/// Header JSON (config + array directory) of a bundle file, for `info`.
std::string bundle_header_json(const std::filesystem::path& path);

}  // namespace anomalyhop
