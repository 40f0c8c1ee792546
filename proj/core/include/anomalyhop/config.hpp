#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "anomalyhop/anomaly.hpp"
#include "anomalyhop/imageio.hpp"
#include "anomalyhop/normality.hpp"
#include "anomalyhop/saab.hpp"

namespace anomalyhop {

/// Per-class training/inference configuration, loaded from a JSON file and
/// carried verbatim inside the model bundle.
struct ClassConfig {
  std::string class_name;
  imageio::ColorMode color_mode = imageio::ColorMode::rgb;
  int resize = 224;
  std::vector<saab::HopSpec> hop_specs;
  normality::ModelKind model_kind = normality::ModelKind::location_independent;
  std::set<int> hops_used;  // 1-based, subset of {1..hop_specs.size()}
  anomaly::FusionConfig fusion;
  double epsilon = 0.01;
  double energy_threshold = 1e-4;
  unsigned seed = 0;

  void validate() const;  // throws ConfigInfeasibleError
};

ClassConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ClassConfig& cfg);

ClassConfig load_config(const std::filesystem::path& path);
void save_config(const ClassConfig& cfg, const std::filesystem::path& path);

}  // namespace anomalyhop
