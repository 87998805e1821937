#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "qsbd/core/error.hpp"
#include "qsbd/geocore/geotransform.hpp"

namespace qsbd::geo {

// Row-major 2-D grid; row 0 is the northernmost row.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int col, int row) { return values[static_cast<std::size_t>(row) * width + col]; }
  const T& at(int col, int row) const { return values[static_cast<std::size_t>(row) * width + col]; }
  bool contains(long col, long row) const { return col >= 0 && row >= 0 && col < width && row < height; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

using Mask = Grid<std::uint8_t>;

struct Raster {
  int width = 0;
  int height = 0;
  GeoTransform transform;
  std::optional<float> nodata;
  std::vector<float> values;

  Raster() = default;
  Raster(int w, int h, GeoTransform t, std::optional<float> nd = std::nullopt, float fill = 0.0f)
      : width(w), height(h), transform(t), nodata(nd), values(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int col, int row) { return values[static_cast<std::size_t>(row) * width + col]; }
  float at(int col, int row) const { return values[static_cast<std::size_t>(row) * width + col]; }
  bool contains(long col, long row) const { return col >= 0 && row >= 0 && col < width && row < height; }
  bool is_nodata(float v) const { return nodata.has_value() && v == *nodata; }

  void validate() const {
    transform.validate();
    if (width <= 0 || height <= 0) throw Error(ErrorKind::kDimensionMismatch, "raster dimensions must be positive");
    if (values.size() != static_cast<std::size_t>(width) * height) {
      throw Error(ErrorKind::kDimensionMismatch, "raster value count differs from width*height");
    }
    for (float v : values) {
      if (!is_nodata(v) && !std::isfinite(v)) {
        throw Error(ErrorKind::kInvalidArgument, "raster holds a non-finite value");
      }
    }
  }
};

}  // namespace qsbd::geo
