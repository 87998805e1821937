#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/core/error.hpp"
#include "qsbd/core/io.hpp"
#include "qsbd/core/rng.hpp"
#include "qsbd/geocore/ascii_grid.hpp"
#include "qsbd/geocore/point_table.hpp"
#include "qsbd/geocore/raster.hpp"
#include "qsbd/geocore/vector_io.hpp"

namespace qsbd::synth {

struct SceneConfig {
  std::string city = "city";
  double extent_m = 0.0;  // square side; 0 sizes the grid to fit building_count
  double origin_x = 500000.0;
  double origin_y = 4100000.0;  // upper-left corner
  double sar_pixel = 2.5;
  double dsm_pixel = 5.0;
  std::size_t building_count = 500;
  double damage_rate = 0.05;
  std::optional<std::size_t> damaged_count;  // exact count; overrides damage_rate
  double s_sar = 0.8;
  double s_dsm = 0.0;
  double s_gem = 0.0;
  double looks = 4.0;
  double gem_cell = 250.0;
  std::uint64_t seed = 0;

  void validate() const {
    auto bad = [&](const std::string& what) { throw Error(ErrorKind::kInvalidArgument, city + ": " + what); };
    if (city.empty() || city.find_first_of("/\\") != std::string::npos) bad("invalid city name");
    if (!(damage_rate > 0.0 && damage_rate < 1.0)) bad("damage rate must be in (0, 1)");
    if (extent_m < 0.0 || !std::isfinite(extent_m)) bad("extent must be positive");
    if (!(sar_pixel > 0.0) || !(dsm_pixel > 0.0) || !(gem_cell > 0.0)) bad("pixel sizes must be positive");
    for (double s : {s_sar, s_dsm, s_gem}) {
      if (!(s >= 0.0 && s <= 1.0)) bad("signal strengths must be in [0, 1]");
    }
    if (!(looks >= 1.0)) bad("looks must be >= 1");
    if (damaged_count && *damaged_count > building_count) bad("damaged count exceeds building count");
  }

  std::size_t resolved_damaged() const {
    if (damaged_count) return *damaged_count;
    const auto n = static_cast<std::size_t>(std::llround(damage_rate * static_cast<double>(building_count)));
    return std::clamp<std::size_t>(n, building_count > 0 ? 1 : 0, building_count);
  }
};

inline void to_json(nlohmann::json& j, const SceneConfig& c) {
  j = {{"city", c.city},
       {"extent_m", c.extent_m},
       {"origin_x", c.origin_x},
       {"origin_y", c.origin_y},
       {"sar_pixel", c.sar_pixel},
       {"dsm_pixel", c.dsm_pixel},
       {"building_count", c.building_count},
       {"damage_rate", c.damage_rate},
       {"damaged_count", c.damaged_count ? nlohmann::json(*c.damaged_count) : nlohmann::json(nullptr)},
       {"s_sar", c.s_sar},
       {"s_dsm", c.s_dsm},
       {"s_gem", c.s_gem},
       {"looks", c.looks},
       {"gem_cell", c.gem_cell},
       {"seed", c.seed}};
}

// Missing keys keep their defaults.
inline void from_json(const nlohmann::json& j, SceneConfig& c) {
  const SceneConfig d;
  c.city = j.value("city", d.city);
  c.extent_m = j.value("extent_m", d.extent_m);
  c.origin_x = j.value("origin_x", d.origin_x);
  c.origin_y = j.value("origin_y", d.origin_y);
  c.sar_pixel = j.value("sar_pixel", d.sar_pixel);
  c.dsm_pixel = j.value("dsm_pixel", d.dsm_pixel);
  c.building_count = j.value("building_count", d.building_count);
  c.damage_rate = j.value("damage_rate", d.damage_rate);
  c.damaged_count.reset();
  if (j.contains("damaged_count") && !j.at("damaged_count").is_null()) {
    c.damaged_count = j.at("damaged_count").get<std::size_t>();
  }
  c.s_sar = j.value("s_sar", d.s_sar);
  c.s_dsm = j.value("s_dsm", d.s_dsm);
  c.s_gem = j.value("s_gem", d.s_gem);
  c.looks = j.value("looks", d.looks);
  c.gem_cell = j.value("gem_cell", d.gem_cell);
  c.seed = j.value("seed", d.seed);
}

struct TruthRecord {
  std::string id;
  int label = 0;
  double height = 0.0;
  int decade = 0;
  std::size_t cell = 0;
};

struct SyntheticTruth {
  std::string city;
  std::vector<TruthRecord> buildings;
};

inline nlohmann::json truth_json(const SyntheticTruth& t, const SceneConfig& cfg) {
  nlohmann::json b = nlohmann::json::array();
  for (const auto& r : t.buildings) {
    b.push_back({{"id", r.id}, {"label", r.label}, {"height", r.height}, {"decade", r.decade}, {"cell", r.cell}});
  }
  return {{"city", t.city}, {"config", cfg}, {"buildings", b}};
}

inline SyntheticTruth parse_truth(const nlohmann::json& j) {
  SyntheticTruth t;
  t.city = j.at("city").get<std::string>();
  for (const auto& b : j.at("buildings")) {
    t.buildings.push_back({b.at("id").get<std::string>(), b.at("label").get<int>(), b.at("height").get<double>(),
                           b.at("decade").get<int>(), b.at("cell").get<std::size_t>()});
  }
  return t;
}

struct GeneratedCity {
  SceneConfig config;
  geo::Raster sar;  // amplitude
  geo::Raster dsm;  // metres
  std::vector<geo::Feature> footprints;
  std::vector<geo::Feature> destroyed;
  geo::PointTable gem;
  SyntheticTruth truth;
  geo::Mask sar_background;  // 1 where no building, stripe or layover touches the pixel
  double background_intensity = 1.0;
};

namespace layout {

inline constexpr double kPlot = 48.0;
inline constexpr int kBlockPlots = 5;
inline constexpr double kStreet = 12.0;
inline constexpr double kBorder = 40.0;
inline constexpr double kPlotMargin = 3.0;
inline constexpr double kMinSide = 14.0;
inline constexpr double kMaxSide = 28.0;
inline constexpr double kOccupancy = 0.75;
inline constexpr double kBlockPitch = kBlockPlots * kPlot + kStreet;

// Number of blocks along one axis that fit in `extent`.
inline int blocks_for(double extent) {
  const double usable = extent - 2.0 * kBorder + kStreet;
  return usable <= 0.0 ? 0 : static_cast<int>(std::floor(usable / kBlockPitch + 1e-9));
}

inline double extent_for(std::size_t buildings) {
  const double plots = std::ceil(static_cast<double>(buildings) / kOccupancy);
  const int blocks = std::max(1, static_cast<int>(std::ceil(std::sqrt(plots / (kBlockPlots * kBlockPlots)))));
  const double e = 2.0 * kBorder + blocks * kBlockPitch - kStreet;
  return std::ceil(e / 10.0) * 10.0;
}

}  // namespace layout

namespace detail {

struct Building {
  double x0, y0, x1, y1;  // x0 < x1, y0 < y1 (y grows north)
  double height;
  std::size_t cell;
  int label = 0;
};

// Exposure cell: latent vulnerability v in [0,1] and the attributes derived from it.
struct Cell {
  double v;
  std::vector<double> attributes;
};

inline const std::vector<std::string>& gem_columns() {
  static const std::vector<std::string> cols{"pre_1980", "y1980_1999", "post_2000",     "urm",
                                             "rc_frame", "rc_wall",    "replacement_cost", "occupancy"};
  return cols;
}

inline Cell make_cell(Rng& rng) {
  Cell c;
  c.v = rng.uniform();
  const double old = std::clamp(0.1 + 0.7 * c.v + rng.normal(0.0, 0.08), 0.02, 0.95);
  const double mid = (1.0 - old) * rng.uniform(0.3, 0.7);
  const double urm = std::clamp(0.05 + 0.55 * c.v + rng.normal(0.0, 0.07), 0.01, 0.9);
  const double wall = std::clamp(0.35 - 0.3 * c.v + rng.normal(0.0, 0.05), 0.01, 0.9);
  const double frame = std::max(0.0, 1.0 - urm - wall);
  const double norm = urm + wall + frame;
  c.attributes = {old,
                  mid,
                  1.0 - old - mid,
                  urm / norm,
                  frame / norm,
                  wall / norm,
                  900.0 - 450.0 * c.v + rng.normal(0.0, 40.0),
                  rng.uniform(3.0, 25.0)};
  return c;
}

inline int draw_decade(const Cell& c, Rng& rng) {
  const double u = rng.uniform();
  if (u < c.attributes[0]) return 1950 + 10 * static_cast<int>(rng.index(3));
  if (u < c.attributes[0] + c.attributes[1]) return 1980 + 10 * static_cast<int>(rng.index(2));
  return 2000 + 10 * static_cast<int>(rng.index(2));
}

inline double terrain(double x, double y, double phase_x, double phase_y) {
  return 20.0 + 8.0 * std::sin(2.0 * std::numbers::pi * x / 1700.0 + phase_x) +
         6.0 * std::cos(2.0 * std::numbers::pi * y / 1300.0 + phase_y);
}

inline std::string building_id(const std::string& city, std::size_t i) {
  std::string n = std::to_string(i + 1);
  if (n.size() < 5) n.insert(0, 5 - n.size(), '0');
  return city + "-" + n;
}

}  // namespace detail

// Damage strength constants. kGemTilt sets the weight ratio between the most and
// least vulnerable cells to exp(kGemTilt * s_gem).
inline constexpr double kStripeGain = 6.0;
inline constexpr double kRoofGain = 1.6;
inline constexpr double kStripeWidth = 5.0;
inline constexpr double kGemTilt = 6.0;

inline GeneratedCity generate_city(const SceneConfig& cfg_in) {
  cfg_in.validate();
  GeneratedCity out;
  out.config = cfg_in;
  auto& cfg = out.config;
  const std::size_t n = cfg.building_count;
  const double extent = cfg.extent_m > 0.0 ? cfg.extent_m : layout::extent_for(n);
  cfg.extent_m = extent;

  // Plot lattice.
  struct Plot {
    double x, y;  // west edge, north edge
  };
  std::vector<Plot> plots;
  const int blocks = layout::blocks_for(extent);
  for (int bj = 0; bj < blocks; ++bj) {
    for (int bi = 0; bi < blocks; ++bi) {
      for (int pj = 0; pj < layout::kBlockPlots; ++pj) {
        for (int pi = 0; pi < layout::kBlockPlots; ++pi) {
          plots.push_back({cfg.origin_x + layout::kBorder + bi * layout::kBlockPitch + pi * layout::kPlot,
                           cfg.origin_y - layout::kBorder - bj * layout::kBlockPitch - pj * layout::kPlot});
        }
      }
    }
  }
  if (n > plots.size()) {
    throw Error(ErrorKind::kPlacementOverflow, cfg.city + ": " + std::to_string(n) + " buildings do not fit in " +
                                                   std::to_string(plots.size()) + " plots of a " +
                                                   text::format_shortest(extent) + " m grid");
  }

  Rng layout_rng(derive_seed(cfg.seed, 1));
  Rng gem_rng(derive_seed(cfg.seed, 2));
  Rng damage_rng(derive_seed(cfg.seed, 3));
  Rng sar_rng(derive_seed(cfg.seed, 4));
  Rng dsm_rng(derive_seed(cfg.seed, 5));
  Rng jitter_rng(derive_seed(cfg.seed, 6));

  std::vector<std::size_t> order(plots.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + layout_rng.index(order.size() - i)]);
  order.resize(n);
  std::sort(order.begin(), order.end());

  // Exposure cells.
  const auto cells_x = static_cast<std::size_t>(std::ceil(extent / cfg.gem_cell));
  std::vector<detail::Cell> cells;
  for (std::size_t c = 0; c < cells_x * cells_x; ++c) cells.push_back(detail::make_cell(gem_rng));
  out.gem.columns = detail::gem_columns();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double cx = cfg.origin_x + (static_cast<double>(c % cells_x) + 0.5) * cfg.gem_cell;
    const double cy = cfg.origin_y - (static_cast<double>(c / cells_x) + 0.5) * cfg.gem_cell;
    out.gem.records.push_back({cx, cy, cells[c].attributes});
  }

  std::vector<detail::Building> buildings;
  for (std::size_t idx : order) {
    const auto& p = plots[idx];
    detail::Building b;
    const double w = layout_rng.uniform(layout::kMinSide, layout::kMaxSide);
    const double d = layout_rng.uniform(layout::kMinSide, layout::kMaxSide);
    const double span = layout::kPlot - 2.0 * layout::kPlotMargin;
    b.x0 = p.x + layout::kPlotMargin + layout_rng.uniform(0.0, span - w);
    b.x1 = b.x0 + w;
    b.y1 = p.y - layout::kPlotMargin - layout_rng.uniform(0.0, span - d);
    b.y0 = b.y1 - d;
    b.height = layout_rng.uniform(3.0, 30.0);
    const auto col = static_cast<std::size_t>(((b.x0 + b.x1) / 2.0 - cfg.origin_x) / cfg.gem_cell);
    const auto row = static_cast<std::size_t>((cfg.origin_y - (b.y0 + b.y1) / 2.0) / cfg.gem_cell);
    b.cell = std::min(row, cells_x - 1) * cells_x + std::min(col, cells_x - 1);
    buildings.push_back(b);
  }

  // Weighted sampling without replacement (Efraimidis-Spirakis keys log(u)/w).
  const std::size_t damaged = cfg.resolved_damaged();
  std::vector<std::pair<double, std::size_t>> keys;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(cfg.s_gem * kGemTilt * (cells[buildings[i].cell].v - 0.5));
    double u = damage_rng.uniform();
    while (u <= 0.0) u = damage_rng.uniform();
    keys.push_back({std::log(u) / w, i});
  }
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t k = 0; k < damaged; ++k) buildings[keys[k].second].label = 1;

  // SAR: mean intensity map, then multiplicative gamma speckle with L looks.
  const int sar_n = static_cast<int>(std::llround(extent / cfg.sar_pixel));
  const geo::GeoTransform sar_t{cfg.origin_x, cfg.origin_y, cfg.sar_pixel, cfg.sar_pixel};
  std::vector<float> mean(static_cast<std::size_t>(sar_n) * sar_n, static_cast<float>(out.background_intensity));
  std::vector<float> rubble(mean.size(), 0.0f);
  out.sar_background = geo::Mask(sar_n, sar_n, 1);
  for (const auto& b : buildings) {
    const double layover = std::min(0.12 * b.height, 3.5);
    double stripe = kStripeGain * std::exp(0.25 * sar_rng.normal());
    if (b.label) stripe *= 1.0 - 0.85 * cfg.s_sar * sar_rng.uniform(0.8, 1.0);
    const double roof = kRoofGain * out.background_intensity;
    const float sigma = b.label ? static_cast<float>(0.9 * cfg.s_sar) : 0.0f;
    const auto lo = geo::world_to_pixel(sar_t, b.x0 - layover, b.y1);
    const auto hi = geo::world_to_pixel(sar_t, b.x1, b.y0);
    for (long row = std::max(0L, static_cast<long>(std::floor(lo.row)));
         row <= std::min<long>(sar_n - 1, static_cast<long>(std::floor(hi.row))); ++row) {
      for (long col = std::max(0L, static_cast<long>(std::floor(lo.col)));
           col <= std::min<long>(sar_n - 1, static_cast<long>(std::floor(hi.col))); ++col) {
        const auto c = geo::pixel_center(sar_t, col, row);
        if (c.y < b.y0 || c.y > b.y1 || c.x < b.x0 - layover || c.x > b.x1) continue;
        const std::size_t i = static_cast<std::size_t>(row) * sar_n + col;
        const bool inside = c.x >= b.x0;
        mean[i] = static_cast<float>(c.x < b.x0 + kStripeWidth ? stripe : roof);
        if (inside) rubble[i] = sigma;
        out.sar_background.at(static_cast<int>(col), static_cast<int>(row)) = 0;
      }
    }
  }
  out.sar = geo::Raster(sar_n, sar_n, sar_t);
  for (std::size_t i = 0; i < mean.size(); ++i) {
    double intensity = mean[i] * sar_rng.gamma(cfg.looks, 1.0 / cfg.looks);
    if (rubble[i] > 0.0f) {
      const double s = rubble[i];
      intensity *= std::exp(s * sar_rng.normal() - 0.5 * s * s);
    }
    out.sar.values[i] = static_cast<float>(std::sqrt(intensity));
  }

  // DSM: smooth terrain + building heights + noise; damaged roofs sink toward terrain.
  const int dsm_n = static_cast<int>(std::llround(extent / cfg.dsm_pixel));
  const geo::GeoTransform dsm_t{cfg.origin_x, cfg.origin_y, cfg.dsm_pixel, cfg.dsm_pixel};
  const double phase_x = dsm_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double phase_y = dsm_rng.uniform(0.0, 2.0 * std::numbers::pi);
  out.dsm = geo::Raster(dsm_n, dsm_n, dsm_t);
  for (int row = 0; row < dsm_n; ++row) {
    for (int col = 0; col < dsm_n; ++col) {
      const auto c = geo::pixel_center(dsm_t, col, row);
      out.dsm.at(col, row) = static_cast<float>(detail::terrain(c.x, c.y, phase_x, phase_y) + dsm_rng.normal(0.0, 0.3));
    }
  }
  for (const auto& b : buildings) {
    const double h = b.label ? b.height * (1.0 - cfg.s_dsm * dsm_rng.uniform(0.6, 0.9)) : b.height;
    const auto lo = geo::world_to_pixel(dsm_t, b.x0, b.y1);
    const auto hi = geo::world_to_pixel(dsm_t, b.x1, b.y0);
    for (long row = std::max(0L, static_cast<long>(std::floor(lo.row)));
         row <= std::min<long>(dsm_n - 1, static_cast<long>(std::floor(hi.row))); ++row) {
      for (long col = std::max(0L, static_cast<long>(std::floor(lo.col)));
           col <= std::min<long>(dsm_n - 1, static_cast<long>(std::floor(hi.col))); ++col) {
        const auto c = geo::pixel_center(dsm_t, col, row);
        if (c.x < b.x0 || c.x > b.x1 || c.y < b.y0 || c.y > b.y1) continue;
        double v = h;
        if (b.label && cfg.s_dsm > 0.0) v += dsm_rng.normal(0.0, 1.5 * cfg.s_dsm);
        out.dsm.at(static_cast<int>(col), static_cast<int>(row)) += static_cast<float>(v);
      }
    }
  }

  // Vector layers and truth.
  out.truth.city = cfg.city;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = buildings[i];
    const std::string id = detail::building_id(cfg.city, i);
    geo::Feature f;
    f.polygon = geo::make_rectangle(b.x0, b.y0, b.x1, b.y1);
    f.properties = {{"id", id}};
    if (b.label) {
      const double r = jitter_rng.uniform(), theta = jitter_rng.uniform(0.0, 2.0 * std::numbers::pi);
      geo::Feature d;
      d.polygon = geo::translate(f.polygon, r * std::cos(theta), r * std::sin(theta));
      d.properties = {{"id", "D" + id}};
      out.destroyed.push_back(std::move(d));
    }
    out.footprints.push_back(std::move(f));
    out.truth.buildings.push_back({id, b.label, b.height, detail::draw_decade(cells[b.cell], gem_rng), b.cell});
  }
  return out;
}

inline void write_city(const GeneratedCity& city, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  geo::write_ascii_grid(city.sar, dir / "sar.asc");
  geo::write_ascii_grid(city.dsm, dir / "dsm.asc");
  geo::write_feature_collection(city.footprints, dir / "footprints.geojson");
  geo::write_feature_collection(city.destroyed, dir / "destroyed.geojson");
  geo::write_point_table(city.gem, dir / "gem.csv");
  io::write_atomic(dir / "truth.json", truth_json(city.truth, city.config).dump(1) + "\n");
}

}  // namespace qsbd::synth
