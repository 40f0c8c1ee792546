#include "anomalyhop/config.hpp"

#include <fstream>

#include <json.hpp>

#include "anomalyhop/errors.hpp"

namespace anomalyhop {

using nlohmann::json;

namespace {

std::string kind_name(normality::ModelKind k) {
  switch (k) {
    case normality::ModelKind::location_aware: return "location_aware";
    case normality::ModelKind::location_independent:
      return "location_independent";
    case normality::ModelKind::self_reference: return "self_reference";
  }
  return "location_independent";
}

normality::ModelKind kind_from(const std::string& s) {
  if (s == "location_aware") return normality::ModelKind::location_aware;
  if (s == "location_independent")
    return normality::ModelKind::location_independent;
  if (s == "self_reference") return normality::ModelKind::self_reference;
  throw ConfigInfeasibleError("unknown model_kind: " + s);
}

}  // namespace

void ClassConfig::validate() const {
  if (resize < 32)
    throw ConfigInfeasibleError("resize must be >= 32");
  if (hop_specs.empty())
    throw ConfigInfeasibleError("hop_specs must be non-empty");
  for (const auto& h : hop_specs) {
    if (h.window < 1) throw ConfigInfeasibleError("hop window must be >= 1");
    if (h.keep < 1 || h.keep > h.window * h.window)
      throw ConfigInfeasibleError("hop keep must be in [1, b*b]");
  }
  for (int h : hops_used)
    if (h < 1 || h > static_cast<int>(hop_specs.size()))
      throw ConfigInfeasibleError("hops_used index out of range");
  if (hops_used.empty())
    throw ConfigInfeasibleError("hops_used must be non-empty");
  if (!fusion.weights.empty() && fusion.weights.size() != hops_used.size())
    throw ConfigInfeasibleError("fusion weights must match hops_used count");
  if (epsilon <= 0.0) throw ConfigInfeasibleError("epsilon must be > 0");
}

std::string config_to_json(const ClassConfig& cfg) {
  json j;
  j["class_name"] = cfg.class_name;
  j["color_mode"] = cfg.color_mode == imageio::ColorMode::gray ? "gray" : "rgb";
  j["resize"] = cfg.resize;
  j["hop_specs"] = json::array();
  for (const auto& h : cfg.hop_specs)
    j["hop_specs"].push_back(
        {{"window", h.window}, {"keep", h.keep}, {"pool_after", h.pool_after}});
  j["model_kind"] = kind_name(cfg.model_kind);
  j["hops_used"] = std::vector<int>(cfg.hops_used.begin(), cfg.hops_used.end());
  j["fusion"] = {{"weights", cfg.fusion.weights},
                 {"target_size", cfg.fusion.target_size},
                 {"smooth_sigma", cfg.fusion.smooth_sigma},
                 {"normalize_per_hop", cfg.fusion.normalize_per_hop}};
  j["epsilon"] = cfg.epsilon;
  j["energy_threshold"] = cfg.energy_threshold;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

ClassConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigInfeasibleError(std::string("config parse error: ") + e.what());
  }
  ClassConfig cfg;
  try {
    cfg.class_name = j.value("class_name", std::string{});
    cfg.color_mode = j.value("color_mode", std::string("rgb")) == "gray"
                         ? imageio::ColorMode::gray
                         : imageio::ColorMode::rgb;
    cfg.resize = j.value("resize", 224);
    for (const auto& h : j.at("hop_specs")) {
      saab::HopSpec spec;
      spec.window = h.at("window").get<int>();
      spec.keep = h.at("keep").get<int>();
      spec.pool_after = h.value("pool_after", true);
      cfg.hop_specs.push_back(spec);
    }
    cfg.model_kind =
        kind_from(j.value("model_kind", std::string("location_independent")));
    if (j.contains("hops_used"))
      for (int h : j["hops_used"]) cfg.hops_used.insert(h);
    else
      for (size_t h = 1; h <= cfg.hop_specs.size(); ++h)
        cfg.hops_used.insert(static_cast<int>(h));
    if (j.contains("fusion")) {
      const auto& f = j["fusion"];
      cfg.fusion.weights = f.value("weights", std::vector<double>{});
      cfg.fusion.target_size = f.value("target_size", cfg.resize);
      cfg.fusion.smooth_sigma = f.value("smooth_sigma", 0.0);
      cfg.fusion.normalize_per_hop = f.value("normalize_per_hop", false);
    } else {
      cfg.fusion.target_size = cfg.resize;
    }
    cfg.epsilon = j.value("epsilon", 0.01);
    cfg.energy_threshold = j.value("energy_threshold", 1e-4);
    cfg.seed = j.value("seed", 0u);
  } catch (const json::exception& e) {
    throw ConfigInfeasibleError(std::string("config field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ClassConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ExitCode::failure, "cannot open config: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json(text);
}

void save_config(const ClassConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ExitCode::failure, "cannot write config: " + path.string());
  out << config_to_json(cfg) << "\n";
}

}  // namespace anomalyhop
