#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qsbd/core/log.hpp"
#include "qsbd/geocore/rasterize.hpp"
#include "qsbd/geocore/raster.hpp"

namespace qsbd::data {

// Top-left pixel of the size x size window around the pixel holding `centroid`.
inline void patch_origin(const geo::GeoTransform& t, const geo::Point& centroid, std::size_t size, long& col0,
                         long& row0) {
  const geo::PixelCoord pc = geo::world_to_pixel(t, centroid.x, centroid.y);
  const long half = static_cast<long>(size / 2);
  col0 = static_cast<long>(std::floor(pc.col)) - half;
  row0 = static_cast<long>(std::floor(pc.row)) - half;
}

// Cells outside the raster or equal to nodata become 0.
inline geo::Grid<float> extract_patch(const geo::Raster& r, const geo::Point& centroid, std::size_t size) {
  if (size == 0 || size % 2 != 0) throw Error(ErrorKind::kInvalidArgument, "patch size must be even and positive");
  long col0, row0;
  patch_origin(r.transform, centroid, size, col0, row0);
  const int n = static_cast<int>(size);
  geo::Grid<float> out(n, n, 0.0f);
  bool any_inside = false;
  for (int i = 0; i < n; ++i) {
    const long row = row0 + i;
    if (row < 0 || row >= r.height) continue;
    for (int j = 0; j < n; ++j) {
      const long col = col0 + j;
      if (col < 0 || col >= r.width) continue;
      any_inside = true;
      const float v = r.at(static_cast<int>(col), static_cast<int>(row));
      out.at(j, i) = r.is_nodata(v) ? 0.0f : v;
    }
  }
  if (!any_inside) {
    log::warn("patch at (" + std::to_string(centroid.x) + ", " + std::to_string(centroid.y) +
              ") lies entirely outside the raster");
  }
  return out;
}

// Samples `src` on the size x size window that extract_patch would take from
// `ref`: each cell takes the src pixel containing the ref cell's center. Outside
// cells and nodata become 0. With identical grids this equals extract_patch(src).
inline geo::Grid<float> resample_patch(const geo::Raster& src, const geo::Raster& ref, const geo::Point& centroid,
                                       std::size_t size) {
  if (size == 0 || size % 2 != 0) throw Error(ErrorKind::kInvalidArgument, "patch size must be even and positive");
  long col0, row0;
  patch_origin(ref.transform, centroid, size, col0, row0);
  const int n = static_cast<int>(size);
  geo::Grid<float> out(n, n, 0.0f);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const geo::Point c = geo::pixel_center(ref.transform, static_cast<int>(col0 + j), static_cast<int>(row0 + i));
      const geo::PixelCoord pc = geo::world_to_pixel(src.transform, c.x, c.y);
      const long col = static_cast<long>(std::floor(pc.col));
      const long row = static_cast<long>(std::floor(pc.row));
      if (col < 0 || col >= src.width || row < 0 || row >= src.height) continue;
      const float v = src.at(static_cast<int>(col), static_cast<int>(row));
      out.at(j, i) = src.is_nodata(v) ? 0.0f : v;
    }
  }
  return out;
}

// Footprint mask on the same window extract_patch uses for raster `r`.
inline geo::Mask footprint_patch(const geo::Raster& r, const geo::Polygon& footprint, const geo::Point& centroid,
                                 std::size_t size) {
  long col0, row0;
  patch_origin(r.transform, centroid, size, col0, row0);
  return geo::rasterize_polygon(footprint, geo::window_transform(r.transform, col0, row0), static_cast<int>(size),
                                static_cast<int>(size));
}

// 10*log10(v + eps) per cell.
inline void to_decibels(std::vector<float>& v, double eps = 1e-6) {
  for (auto& x : v) x = static_cast<float>(10.0 * std::log10(std::max(0.0, static_cast<double>(x)) + eps));
}

// Subtracts the patch median (mean of the two middle values for even counts).
inline void subtract_median(std::vector<float>& v) {
  if (v.empty()) return;
  std::vector<float> tmp = v;
  const std::size_t mid = tmp.size() / 2;
  std::nth_element(tmp.begin(), tmp.begin() + static_cast<long>(mid), tmp.end());
  double med = tmp[mid];
  if (tmp.size() % 2 == 0) {
    const float lower = *std::max_element(tmp.begin(), tmp.begin() + static_cast<long>(mid));
    med = 0.5 * (med + static_cast<double>(lower));
  }
  for (auto& x : v) x = static_cast<float>(static_cast<double>(x) - med);
}

}  // namespace qsbd::data
