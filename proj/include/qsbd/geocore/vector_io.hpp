#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/core/error.hpp"
#include "qsbd/core/io.hpp"
#include "qsbd/core/text.hpp"
#include "qsbd/geocore/polygon.hpp"

namespace qsbd::geo {

struct Feature {
  Polygon polygon;
  nlohmann::json properties = nlohmann::json::object();

  std::string id() const { return properties.at("id").get<std::string>(); }
};

namespace detail {

inline Ring parse_ring(const nlohmann::json& coords, const std::string& where) {
  if (!coords.is_array()) throw Error(ErrorKind::kParse, where + ": ring is not an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
      throw Error(ErrorKind::kParse, where + ": position must be [x, y]");
    }
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  return ring;
}

inline Polygon parse_polygon_coords(const nlohmann::json& rings, const std::string& where) {
  if (!rings.is_array() || rings.empty()) {
    throw Error(ErrorKind::kParse, where + ": Polygon needs at least one ring");
  }
  Polygon p;
  p.exterior = parse_ring(rings[0], where);
  for (std::size_t i = 1; i < rings.size(); ++i) p.holes.push_back(parse_ring(rings[i], where));
  try {
    validate_polygon(p);
  } catch (const Error& e) {
    throw Error(ErrorKind::kParse, where + ": " + e.what());
  }
  return p;
}

inline nlohmann::json ring_to_json(const Ring& ring) {
  auto out = nlohmann::json::array();
  for (const auto& v : ring) out.push_back({v.x, v.y});
  return out;
}

}  // namespace detail

// GeoJSON FeatureCollection subset. MultiPolygon features are split into one
// Feature per part; all parts share the source feature's properties.
inline std::vector<Feature> parse_feature_collection(std::string_view content,
                                                     const std::string& source = "<memory>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, source + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw Error(ErrorKind::kParse, source + ": expected a FeatureCollection with a features array");
  }
  std::vector<Feature> out;
  std::size_t index = 0;
  for (const auto& f : doc["features"]) {
    const std::string where = source + ": feature " + std::to_string(index++);
    if (!f.is_object() || !f.contains("geometry") || !f["geometry"].is_object()) {
      throw Error(ErrorKind::kParse, where + ": missing geometry");
    }
    nlohmann::json props = f.contains("properties") && f["properties"].is_object() ? f["properties"]
                                                                                  : nlohmann::json::object();
    if (!props.contains("id") || !props["id"].is_string()) {
      throw Error(ErrorKind::kParse, where + ": required string property 'id' missing");
    }
    const auto& geom = f["geometry"];
    const std::string type = geom.value("type", "");
    if (type == "Polygon") {
      out.push_back({detail::parse_polygon_coords(geom.at("coordinates"), where), props});
    } else if (type == "MultiPolygon") {
      const auto& parts = geom.at("coordinates");
      if (!parts.is_array()) throw Error(ErrorKind::kParse, where + ": MultiPolygon coordinates");
      for (const auto& part : parts) out.push_back({detail::parse_polygon_coords(part, where), props});
    } else {
      throw Error(ErrorKind::kUnsupportedGeometry, where + ": geometry type '" + type + "'");
    }
  }
  return out;
}

inline std::vector<Feature> read_feature_collection(const std::filesystem::path& path) {
  return parse_feature_collection(io::read_text(path), path.string());
}

inline nlohmann::json feature_collection_json(const std::vector<Feature>& features) {
  auto list = nlohmann::json::array();
  for (const auto& f : features) {
    auto rings = nlohmann::json::array();
    rings.push_back(detail::ring_to_json(f.polygon.exterior));
    for (const auto& h : f.polygon.holes) rings.push_back(detail::ring_to_json(h));
    list.push_back({{"type", "Feature"},
                    {"properties", f.properties},
                    {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", list}};
}

inline void write_feature_collection(const std::vector<Feature>& features, const std::filesystem::path& path) {
  io::write_atomic(path, feature_collection_json(features).dump() + "\n");
}

}  // namespace qsbd::geo
