#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/core/log.hpp"
#include "qsbd/synth/scene.hpp"

namespace qsbd::synth {

struct CampaignConfig {
  std::uint64_t seed = 0;
  std::vector<SceneConfig> cities;

  void validate() const {
    if (cities.size() < 2) throw Error(ErrorKind::kInvalidArgument, "a campaign needs at least two cities");
    std::set<std::string> names;
    for (const auto& c : cities) {
      c.validate();
      if (!names.insert(c.city).second) throw Error(ErrorKind::kInvalidArgument, "duplicate city " + c.city);
    }
  }
};

inline void to_json(nlohmann::json& j, const CampaignConfig& c) {
  j = {{"seed", c.seed}, {"cities", c.cities}};
}

inline void from_json(const nlohmann::json& j, CampaignConfig& c) {
  c.seed = j.value("seed", std::uint64_t{0});
  c.cities = j.at("cities").get<std::vector<SceneConfig>>();
}

inline std::string city_name(std::size_t i) {
  return std::string("city") + (i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
}

// `n` identical cities named city01, city02, ...
inline CampaignConfig uniform_campaign(std::size_t n, const SceneConfig& base, std::uint64_t seed) {
  CampaignConfig c;
  c.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    SceneConfig s = base;
    s.city = city_name(i);
    c.cities.push_back(s);
  }
  return c;
}

// Five cities with the damaged/intact counts of the earthquake dataset this tool is
// modelled on. Every city is sized so that 20x negative sampling is capped by the
// intact stock, which reproduces the per-city sample counts exactly.
inline CampaignConfig table_campaign(std::uint64_t seed, const SceneConfig& base = {}) {
  struct Row {
    const char* city;
    std::size_t intact, damaged;
  };
  static constexpr Row rows[] = {{"islahiye", 3825, 192},
                                 {"kahramanmaras", 4641, 233},
                                 {"nurdagi", 3289, 498},
                                 {"osmaniye", 317, 16},
                                 {"turkoglu", 453, 23}};
  CampaignConfig c;
  c.seed = seed;
  for (const auto& r : rows) {
    SceneConfig s = base;
    s.city = r.city;
    s.building_count = r.intact + r.damaged;
    s.damaged_count = r.damaged;
    s.damage_rate = static_cast<double>(r.damaged) / static_cast<double>(s.building_count);
    c.cities.push_back(s);
  }
  return c;
}

// Resolves per-city seeds from (campaign seed, city index).
inline CampaignConfig resolve_seeds(CampaignConfig c) {
  for (std::size_t i = 0; i < c.cities.size(); ++i) c.cities[i].seed = derive_seed(c.seed, i);
  return c;
}

// Writes <root>/<city>/{sar.asc, dsm.asc, footprints.geojson, destroyed.geojson,
// gem.csv, truth.json} and <root>/campaign.json. Returns the resolved config.
inline CampaignConfig generate_campaign(const CampaignConfig& cfg, const std::filesystem::path& root) {
  cfg.validate();
  CampaignConfig resolved = resolve_seeds(cfg);
  std::filesystem::create_directories(root);
  for (auto& city : resolved.cities) {
    const auto generated = generate_city(city);
    city.extent_m = generated.config.extent_m;
    write_city(generated, root / city.city);
    std::size_t damaged = 0;
    for (const auto& b : generated.truth.buildings) damaged += static_cast<std::size_t>(b.label);
    log::info(city.city + ": " + std::to_string(city.building_count) + " buildings, " + std::to_string(damaged) +
              " damaged, " + text::format_shortest(city.extent_m) + " m extent");
  }
  io::write_atomic(root / "campaign.json", nlohmann::json(resolved).dump(2) + "\n");
  return resolved;
}

inline CampaignConfig load_campaign(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(io::read_text(path)).get<CampaignConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace qsbd::synth
