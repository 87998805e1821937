#pragma once

#ifndef BOOST_GEOMETRY_NO_ROBUSTNESS
#define BOOST_GEOMETRY_NO_ROBUSTNESS
#endif
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include <cmath>
#include <tuple>

#include "qsbd/geocore/polygon.hpp"

namespace qsbd::geo {

namespace detail {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;
using BgMultiPolygon = bg::model::multi_polygon<BgPolygon>;

inline BgPolygon to_boost(const Polygon& p) {
  BgPolygon out;
  for (const auto& v : p.exterior) bg::append(out.outer(), BgPoint(v.x, v.y));
  out.inners().resize(p.holes.size());
  for (std::size_t i = 0; i < p.holes.size(); ++i) {
    for (const auto& v : p.holes[i]) bg::append(out.inners()[i], BgPoint(v.x, v.y));
  }
  bg::correct(out);
  return out;
}

// Lexicographic order on vertex data, used to make the clip symmetric bit-for-bit.
inline bool canonical_less(const Polygon& a, const Polygon& b) {
  auto key = [](const Ring& r) {
    std::vector<std::tuple<double, double>> k;
    k.reserve(r.size());
    for (const auto& v : r) k.emplace_back(v.x, v.y);
    return k;
  };
  return key(a.exterior) < key(b.exterior);
}

}  // namespace detail

// Area of the geometric intersection. Slivers below 1e-12 m^2 count as empty.
inline double polygon_intersection_area(const Polygon& a, const Polygon& b) {
  if (polygon_area(a) < kDegenerateArea || polygon_area(b) < kDegenerateArea) {
    throw Error(ErrorKind::kDegeneratePolygon, "intersection operand has area below 1e-12 m^2");
  }
  if (!bbox(a).intersects(bbox(b))) return 0.0;
  const bool swap = detail::canonical_less(b, a);
  const auto first = detail::to_boost(swap ? b : a);
  const auto second = detail::to_boost(swap ? a : b);
  detail::BgMultiPolygon result;
  detail::bg::intersection(first, second, result);
  const double area = std::abs(detail::bg::area(result));
  return area < kDegenerateArea ? 0.0 : area;
}

}  // namespace qsbd::geo
