#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qsbd/geocore/polygon.hpp"
#include "qsbd/geocore/raster.hpp"

namespace qsbd::geo {

// Scanline fill: a cell is 1 iff its center lies inside the polygon by the even-odd rule.
inline Mask rasterize_polygon(const Polygon& polygon, const GeoTransform& t, int width, int height) {
  Mask mask(width, height, 0);
  if (width <= 0 || height <= 0 || polygon.exterior.size() < 2) return mask;

  const BBox box = bbox(polygon);
  const PixelCoord top_left = world_to_pixel(t, box.min_x, box.max_y);
  const PixelCoord bottom_right = world_to_pixel(t, box.max_x, box.min_y);
  const long row_begin = std::max<long>(0, static_cast<long>(std::floor(top_left.row)) - 1);
  const long row_end = std::min<long>(height, static_cast<long>(std::ceil(bottom_right.row)) + 1);

  std::vector<double> crossings;
  auto collect = [&](const Ring& ring, double py) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const Point& a = ring[i];
      const Point& b = ring[i + 1];
      // Interpolated from the edge's end vertex, as in the usual crossing-number
      // test, so centers within an ulp of an edge classify the same way.
      if ((a.y > py) != (b.y > py)) {
        crossings.push_back((a.x - b.x) * (py - b.y) / (a.y - b.y) + b.x);
      }
    }
  };

  for (long row = row_begin; row < row_end; ++row) {
    const double py = pixel_center(t, 0, row).y;
    crossings.clear();
    collect(polygon.exterior, py);
    for (const auto& h : polygon.holes) collect(h, py);
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());

    // Inside iff an odd number of crossings lie strictly right of the center.
    std::size_t at_or_left = 0;
    for (int col = 0; col < width; ++col) {
      const double px = pixel_center(t, col, row).x;
      while (at_or_left < crossings.size() && crossings[at_or_left] <= px) ++at_or_left;
      if ((crossings.size() - at_or_left) % 2 == 1) mask.at(col, static_cast<int>(row)) = 1;
    }
  }
  return mask;
}

}  // namespace qsbd::geo
