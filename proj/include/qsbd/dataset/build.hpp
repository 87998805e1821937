#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "qsbd/core/log.hpp"
#include "qsbd/dataset/patch.hpp"
#include "qsbd/dataset/records.hpp"
#include "qsbd/dataset/sampling.hpp"
#include "qsbd/dataset/store.hpp"
#include "qsbd/geocore/ascii_grid.hpp"

namespace qsbd::data {

struct SceneInputs {
  std::string city;
  std::filesystem::path sar;
  std::filesystem::path dsm;
  std::filesystem::path footprints;
  std::filesystem::path destroyed;
  std::filesystem::path gem;

  // The standard file names inside one city directory; the city is the directory name.
  static SceneInputs from_dir(const std::filesystem::path& dir) {
    return {dir.filename().string(), dir / "sar.asc", dir / "dsm.asc", dir / "footprints.geojson",
            dir / "destroyed.geojson", dir / "gem.csv"};
  }

  std::vector<std::filesystem::path> files() const { return {sar, dsm, footprints, destroyed, gem}; }
};

// Every subdirectory holding a footprints.geojson, in name order.
inline std::vector<SceneInputs> discover_scenes(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> dirs;
  if (!std::filesystem::is_directory(root)) throw Error(ErrorKind::kIo, root.string() + " is not a directory");
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "footprints.geojson")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error(ErrorKind::kIo, "no scene directories under " + root.string());
  std::vector<SceneInputs> out;
  for (const auto& d : dirs) out.push_back(SceneInputs::from_dir(d));
  return out;
}

struct BuildConfig {
  std::size_t patch_size = 32;
  double sampling_ratio = 20.0;
  std::uint64_t seed = 0;
  double overlap_ratio = 0.5;
  bool sar_db = false;
  bool dsm_relative = true;
  bool dsm_on_sar_grid = true;  // false: 32 native DSM pixels
};

inline void to_json(nlohmann::json& j, const BuildConfig& c) {
  j = {{"patch_size", c.patch_size}, {"sampling_ratio", c.sampling_ratio}, {"seed", c.seed},
       {"overlap_ratio", c.overlap_ratio}, {"sar_db", c.sar_db}, {"dsm_relative", c.dsm_relative},
       {"dsm_on_sar_grid", c.dsm_on_sar_grid}};
}

inline void from_json(const nlohmann::json& j, BuildConfig& c) {
  c.patch_size = j.value("patch_size", c.patch_size);
  c.sampling_ratio = j.value("sampling_ratio", c.sampling_ratio);
  c.seed = j.value("seed", c.seed);
  c.overlap_ratio = j.value("overlap_ratio", c.overlap_ratio);
  c.sar_db = j.value("sar_db", c.sar_db);
  c.dsm_relative = j.value("dsm_relative", c.dsm_relative);
  c.dsm_on_sar_grid = j.value("dsm_on_sar_grid", c.dsm_on_sar_grid);
}

struct LoadedScene {
  SceneInputs inputs;
  geo::Raster sar;
  geo::Raster dsm;
  geo::PointTable gem;
  std::vector<BuildingRecord> records;  // labeled, with exposure vectors
};

inline LoadedScene load_scene(const SceneInputs& in, double overlap_ratio) {
  LoadedScene s;
  s.inputs = in;
  s.sar = geo::read_ascii_grid(in.sar);
  s.dsm = geo::read_ascii_grid(in.dsm);
  s.gem = geo::read_point_table(in.gem);
  s.records = make_records(geo::read_feature_collection(in.footprints), in.city);
  std::vector<geo::Polygon> destroyed;
  for (auto& f : geo::read_feature_collection(in.destroyed)) destroyed.push_back(std::move(f.polygon));
  label_buildings(s.records, destroyed, overlap_ratio);
  join_gem(s.records, s.gem);
  return s;
}

// Patches for one record. The mask is rasterized on the SAR window, and by default
// the DSM is sampled on that window too, so all three cover the same ground.
inline Sample make_sample(const LoadedScene& scene, const BuildingRecord& r, const BuildConfig& cfg,
                          std::vector<float> gem) {
  Sample s;
  s.building_id = r.id;
  s.city = r.city;
  s.label = r.label;
  s.sar = extract_patch(scene.sar, r.centroid, cfg.patch_size).values;
  if (cfg.sar_db) to_decibels(s.sar);
  s.dsm = cfg.dsm_on_sar_grid ? resample_patch(scene.dsm, scene.sar, r.centroid, cfg.patch_size).values
                              : extract_patch(scene.dsm, r.centroid, cfg.patch_size).values;
  if (cfg.dsm_relative) subtract_median(s.dsm);
  s.mask = footprint_patch(scene.sar, r.footprint, r.centroid, cfg.patch_size).values;
  s.gem = std::move(gem);
  return s;
}

inline SampleSet build_dataset(const std::vector<SceneInputs>& scenes, const BuildConfig& cfg) {
  if (scenes.empty()) throw Error(ErrorKind::kInvalidArgument, "no scenes to build from");
  std::set<std::string> names;
  for (const auto& in : scenes) {
    if (!names.insert(in.city).second) throw Error(ErrorKind::kInvalidArgument, "duplicate city " + in.city);
  }
  std::vector<LoadedScene> loaded;
  std::vector<BuildingRecord> all;
  std::vector<std::string> columns;
  for (const auto& in : scenes) {
    loaded.push_back(load_scene(in, cfg.overlap_ratio));
    const auto& sc = loaded.back();
    std::vector<std::string> cols(sc.gem.columns.begin(), sc.gem.columns.end());
    if (columns.empty()) columns = cols;
    else if (cols != columns) throw Error(ErrorKind::kDimensionMismatch, in.city + ": exposure columns differ");
    std::size_t damaged = 0;
    for (const auto& r : sc.records) damaged += static_cast<std::size_t>(r.label);
    if (damaged == 0) log::warn(in.city + ": no damaged buildings; the city contributes no samples");
    log::info(in.city + ": " + std::to_string(sc.records.size()) + " buildings, " + std::to_string(damaged) +
              " damaged");
    all.insert(all.end(), sc.records.begin(), sc.records.end());
  }
  const std::vector<BuildingRecord> selected = sample_negatives(all, cfg.sampling_ratio, cfg.seed);

  SampleSet set;
  auto& m = set.manifest;
  m.patch_size = cfg.patch_size;
  m.gem_columns = columns;
  m.sampling_seed = cfg.seed;
  m.sampling_ratio = cfg.sampling_ratio;
  m.sar_db = cfg.sar_db;
  m.dsm_relative = cfg.dsm_relative;
  m.dsm_on_sar_grid = cfg.dsm_on_sar_grid;
  if (selected.empty()) {
    log::warn("no damaged buildings in any scene; the dataset is empty");
    m.gem_norm = {std::vector<double>(columns.size(), 0.0), std::vector<double>(columns.size(), 1.0),
                  std::vector<bool>(columns.size(), false)};
    return set;
  }
  if (selected.size() < 2) throw Error(ErrorKind::kInvalidArgument, "dataset needs at least two samples");
  auto [gem_rows, stats] = normalize_gem(selected);
  for (std::size_t k = 0; k < stats.dim(); ++k) {
    if (stats.constant[k]) log::warn("exposure feature '" + columns[k] + "' is constant; it is zeroed");
  }
  m.gem_norm = stats;
  std::map<std::string, const LoadedScene*> by_city;
  for (const auto& sc : loaded) by_city[sc.inputs.city] = &sc;
  set.samples.reserve(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    set.samples.push_back(make_sample(*by_city.at(selected[i].city), selected[i], cfg, std::move(gem_rows[i])));
  }
  m.record_count = set.samples.size();
  m.cities = count_by_city(set.samples);
  return set;
}

}  // namespace qsbd::data
