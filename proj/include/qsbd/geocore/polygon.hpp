#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qsbd/core/error.hpp"
#include "qsbd/geocore/geotransform.hpp"

namespace qsbd::geo {

using Ring = std::vector<Point>;

struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct BBox {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void extend(const Point& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  bool intersects(const BBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
};

inline constexpr double kDegenerateArea = 1e-12;

// Axis-aligned rectangle as a closed counter-clockwise ring.
inline Polygon make_rectangle(double x0, double y0, double x1, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}, {}};
}

inline BBox bbox(const Polygon& p) {
  BBox b;
  for (const auto& v : p.exterior) b.extend(v);
  return b;
}

// Shoelace signed area; positive for counter-clockwise rings.
inline double signed_ring_area(const Ring& ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    twice += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  }
  return 0.5 * twice;
}

inline double polygon_area(const Polygon& p) {
  double area = std::abs(signed_ring_area(p.exterior));
  for (const auto& h : p.holes) area -= std::abs(signed_ring_area(h));
  return area;
}

namespace detail {

inline double orient(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return (d1 == 0 && on_segment(q1, q2, p1)) || (d2 == 0 && on_segment(q1, q2, p2)) ||
         (d3 == 0 && on_segment(p1, p2, q1)) || (d4 == 0 && on_segment(p1, p2, q2));
}

inline void validate_ring(const Ring& ring, const char* what) {
  if (ring.size() < 4) {
    throw Error(ErrorKind::kInvalidArgument, std::string(what) + " ring needs at least 4 vertices");
  }
  if (!(ring.front() == ring.back())) {
    throw Error(ErrorKind::kInvalidArgument, std::string(what) + " ring is not closed");
  }
  for (const auto& v : ring) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw Error(ErrorKind::kInvalidArgument, std::string(what) + " ring has a non-finite vertex");
    }
  }
}

}  // namespace detail

// O(n^2) check that no two non-adjacent edges of the ring touch.
inline bool ring_is_simple(const Ring& ring) {
  const std::size_t n = ring.size() - 1;  // edge count
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (detail::segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1])) return false;
    }
  }
  return true;
}

inline void validate_polygon(const Polygon& p) {
  detail::validate_ring(p.exterior, "exterior");
  for (const auto& h : p.holes) detail::validate_ring(h, "interior");
  if (!ring_is_simple(p.exterior)) {
    throw Error(ErrorKind::kInvalidArgument, "exterior ring self-intersects");
  }
}

// Area-weighted centroid; holes subtract their moments.
inline Point polygon_centroid(const Polygon& p) {
  double area = 0.0;
  double mx = 0.0;
  double my = 0.0;
  auto accumulate = [&](const Ring& ring, double sign) {
    double a = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const double cross = ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
      a += cross;
      cx += (ring[i].x + ring[i + 1].x) * cross;
      cy += (ring[i].y + ring[i + 1].y) * cross;
    }
    // Normalise orientation so the exterior counts positive and holes negative.
    const double orientation = a < 0.0 ? -1.0 : 1.0;
    area += sign * orientation * 0.5 * a;
    mx += sign * orientation * cx / 6.0;
    my += sign * orientation * cy / 6.0;
  };
  accumulate(p.exterior, 1.0);
  for (const auto& h : p.holes) accumulate(h, -1.0);
  if (std::abs(area) < kDegenerateArea) {
    throw Error(ErrorKind::kDegeneratePolygon, "polygon area below 1e-12 m^2");
  }
  return {mx / area, my / area};
}

// Crossing-number test against one ring. The crossing abscissa is computed the same
// way as in the scanline rasterizer so both agree on boundary cases.
inline bool ring_crossings_odd(const Ring& ring, double px, double py) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Point& a = ring[i];
    const Point& b = ring[i + 1];
    if ((a.y > py) != (b.y > py)) {
      const double x_cross = (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x;
      if (px < x_cross) inside = !inside;
    }
  }
  return inside;
}

// Even-odd membership over all rings, so holes are excluded.
inline bool point_in_polygon(const Polygon& p, double px, double py) {
  bool inside = ring_crossings_odd(p.exterior, px, py);
  for (const auto& h : p.holes) {
    if (ring_crossings_odd(h, px, py)) inside = !inside;
  }
  return inside;
}

inline Polygon translate(Polygon p, double dx, double dy) {
  auto shift = [&](Ring& r) {
    for (auto& v : r) {
      v.x += dx;
      v.y += dy;
    }
  };
  shift(p.exterior);
  for (auto& h : p.holes) shift(h);
  return p;
}

}  // namespace qsbd::geo
