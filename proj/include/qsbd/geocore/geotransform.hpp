#pragma once

#include <cmath>
#include <string>

#include "qsbd/core/error.hpp"

namespace qsbd::geo {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PixelCoord {
  double col = 0.0;
  double row = 0.0;
};

// North-up affine transform. origin is the top-left corner of pixel (0, 0);
// rows grow southward, so pixel_h is stored positive.
struct GeoTransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_w = 1.0;
  double pixel_h = 1.0;

  void validate() const {
    if (!(pixel_w > 0.0) || !(pixel_h > 0.0) || !std::isfinite(pixel_w) || !std::isfinite(pixel_h)) {
      throw Error(ErrorKind::kInvalidArgument, "geotransform pixel sizes must be positive and finite");
    }
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
      throw Error(ErrorKind::kInvalidArgument, "geotransform origin must be finite");
    }
  }

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

inline PixelCoord world_to_pixel(const GeoTransform& t, double x, double y) {
  return {(x - t.origin_x) / t.pixel_w, (t.origin_y - y) / t.pixel_h};
}

inline Point pixel_to_world(const GeoTransform& t, double col, double row) {
  return {t.origin_x + col * t.pixel_w, t.origin_y - row * t.pixel_h};
}

// World coordinates of the center of integer pixel (col, row).
inline Point pixel_center(const GeoTransform& t, long col, long row) {
  return pixel_to_world(t, static_cast<double>(col) + 0.5, static_cast<double>(row) + 0.5);
}

// Transform of a window whose top-left pixel is (col0, row0) in `t`.
inline GeoTransform window_transform(const GeoTransform& t, long col0, long row0) {
  return {t.origin_x + static_cast<double>(col0) * t.pixel_w,
          t.origin_y - static_cast<double>(row0) * t.pixel_h, t.pixel_w, t.pixel_h};
}

}  // namespace qsbd::geo
