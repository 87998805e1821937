#pragma once

#include <map>
#include <string>
#include <vector>

#include "qsbd/core/log.hpp"
#include "qsbd/geocore/intersection.hpp"
#include "qsbd/geocore/point_table.hpp"
#include "qsbd/geocore/polygon.hpp"
#include "qsbd/geocore/vector_io.hpp"

namespace qsbd::data {

struct BuildingRecord {
  std::string id;
  geo::Polygon footprint;
  geo::Point centroid;
  std::string city;
  int label = 0;
  std::vector<double> gem_vector;
};

// One record per footprint polygon. Parts of a split MultiPolygon share an id, so
// repeats within a city get a "#n" suffix to keep building ids unique.
inline std::vector<BuildingRecord> make_records(const std::vector<geo::Feature>& features, const std::string& city) {
  std::vector<BuildingRecord> out;
  std::map<std::string, int> seen;
  out.reserve(features.size());
  for (const auto& f : features) {
    BuildingRecord r;
    r.id = f.id();
    const int n = ++seen[r.id];
    if (n > 1) r.id += "#" + std::to_string(n);
    r.footprint = f.polygon;
    r.centroid = geo::polygon_centroid(f.polygon);
    r.city = city;
    out.push_back(std::move(r));
  }
  return out;
}

// A footprint is damaged when some destroyed polygon covers at least `min_ratio`
// of the smaller of the two areas.
inline void label_buildings(std::vector<BuildingRecord>& records, const std::vector<geo::Polygon>& destroyed,
                            double min_ratio = 0.5) {
  std::vector<geo::BBox> boxes;
  std::vector<double> areas;
  boxes.reserve(destroyed.size());
  for (const auto& d : destroyed) {
    boxes.push_back(geo::bbox(d));
    areas.push_back(geo::polygon_area(d));
  }
  for (auto& r : records) {
    r.label = 0;
    const geo::BBox fb = geo::bbox(r.footprint);
    const double fa = geo::polygon_area(r.footprint);
    for (std::size_t k = 0; k < destroyed.size(); ++k) {
      if (!fb.intersects(boxes[k])) continue;
      const double inter = geo::polygon_intersection_area(r.footprint, destroyed[k]);
      if (inter / std::min(fa, areas[k]) >= min_ratio) {
        r.label = 1;
        break;
      }
    }
  }
}

// Attaches the attribute vector of the exposure point nearest to each centroid.
inline void join_gem(std::vector<BuildingRecord>& records, const geo::PointTable& table) {
  if (table.records.empty()) throw Error(ErrorKind::kEmptyTable, "exposure table has no rows");
  for (auto& r : records) r.gem_vector = table.records[geo::nearest_point(r.centroid, table.records)].attributes;
}

}  // namespace qsbd::data
