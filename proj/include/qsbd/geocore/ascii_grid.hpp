#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <string>

#include "qsbd/core/error.hpp"
#include "qsbd/core/io.hpp"
#include "qsbd/core/text.hpp"
#include "qsbd/geocore/raster.hpp"

namespace qsbd::geo {

// ESRI ASCII grid. Values are written in shortest round-trip form, so a
// write/read cycle reproduces every 32-bit value exactly.
inline Raster parse_ascii_grid(std::string_view content, const std::string& source = "<memory>") {
  const auto lines = text::split_lines(content);
  std::map<std::string, std::string> header;
  std::size_t line_no = 0;
  for (; line_no < lines.size(); ++line_no) {
    const auto tokens = text::split_whitespace(lines[line_no]);
    if (tokens.empty()) continue;
    if (text::parse_number<double>(tokens[0]).has_value()) break;
    if (tokens.size() != 2) {
      throw Error(ErrorKind::kParse, source + ":" + std::to_string(line_no + 1) + ": malformed header line");
    }
    header[text::lower(tokens[0])] = std::string(tokens[1]);
  }

  auto number = [&](const std::string& key) -> std::optional<double> {
    auto it = header.find(key);
    if (it == header.end()) return std::nullopt;
    auto v = text::parse_number<double>(it->second);
    if (!v || !std::isfinite(*v)) {
      throw Error(ErrorKind::kParse, source + ": header field '" + key + "' is not a finite number");
    }
    return v;
  };
  auto required = [&](const std::string& key) {
    auto v = number(key);
    if (!v) throw Error(ErrorKind::kParse, source + ": missing header field '" + key + "'");
    return *v;
  };

  const double ncols = required("ncols");
  const double nrows = required("nrows");
  if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows)) {
    throw Error(ErrorKind::kParse, source + ": ncols/nrows must be positive integers");
  }
  double pixel_w = 0.0;
  double pixel_h = 0.0;
  if (auto cs = number("cellsize")) {
    pixel_w = pixel_h = *cs;
  } else {
    pixel_w = required("dx");
    pixel_h = required("dy");
  }
  double x_left = 0.0;
  double y_bottom = 0.0;
  if (auto xc = number("xllcenter")) {
    x_left = *xc - 0.5 * pixel_w;
  } else {
    x_left = required("xllcorner");
  }
  if (auto yc = number("yllcenter")) {
    y_bottom = *yc - 0.5 * pixel_h;
  } else {
    y_bottom = required("yllcorner");
  }

  Raster raster;
  raster.width = static_cast<int>(ncols);
  raster.height = static_cast<int>(nrows);
  raster.transform = GeoTransform{x_left, y_bottom + nrows * pixel_h, pixel_w, pixel_h};
  if (auto it = header.find("nodata_value"); it != header.end()) {
    auto nd = text::parse_number<float>(it->second);
    if (!nd) throw Error(ErrorKind::kParse, source + ": NODATA_value is not a number");
    raster.nodata = *nd;
  }
  try {
    raster.transform.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kParse, source + ": " + e.what());
  }

  const std::size_t expected = static_cast<std::size_t>(raster.width) * raster.height;
  raster.values.reserve(expected);
  for (; line_no < lines.size(); ++line_no) {
    for (auto token : text::split_whitespace(lines[line_no])) {
      auto v = text::parse_number<float>(token);
      if (!v || (!std::isfinite(*v) && !raster.is_nodata(*v))) {
        throw Error(ErrorKind::kParse, source + ":" + std::to_string(line_no + 1) + ": bad cell value '" +
                                           std::string(token) + "'");
      }
      raster.values.push_back(*v);
    }
  }
  if (raster.values.size() != expected) {
    throw Error(ErrorKind::kDimensionMismatch, source + ": found " + std::to_string(raster.values.size()) +
                                                   " cells, expected " + std::to_string(expected));
  }
  return raster;
}

inline Raster read_ascii_grid(const std::filesystem::path& path) {
  return parse_ascii_grid(io::read_text(path), path.string());
}

// The header stores the lower edge, and readers recover the top as
// yllcorner + nrows * dy. Among the doubles next to the exact lower edge, pick
// one whose reconstruction lands on origin_y bit for bit.
inline double lower_edge_for(double origin_y, int rows, double pixel_h) {
  const double span = rows * pixel_h;
  const double guess = origin_y - span;
  double below = guess, above = guess;
  for (int step = 0; step < 8; ++step) {
    if (below + span == origin_y) return below;
    if (above + span == origin_y) return above;
    below = std::nextafter(below, -std::numeric_limits<double>::infinity());
    above = std::nextafter(above, std::numeric_limits<double>::infinity());
  }
  return guess;
}

inline std::string format_ascii_grid(const Raster& r) {
  r.validate();
  std::string out;
  out.reserve(static_cast<std::size_t>(r.width) * r.height * 10 + 256);
  const double y_bottom = lower_edge_for(r.transform.origin_y, r.height, r.transform.pixel_h);
  out += "ncols " + std::to_string(r.width) + "\n";
  out += "nrows " + std::to_string(r.height) + "\n";
  out += "xllcorner " + text::format_shortest(r.transform.origin_x) + "\n";
  out += "yllcorner " + text::format_shortest(y_bottom) + "\n";
  if (r.transform.pixel_w == r.transform.pixel_h) {
    out += "cellsize " + text::format_shortest(r.transform.pixel_w) + "\n";
  } else {
    out += "dx " + text::format_shortest(r.transform.pixel_w) + "\n";
    out += "dy " + text::format_shortest(r.transform.pixel_h) + "\n";
  }
  if (r.nodata) out += "NODATA_value " + text::format_shortest(*r.nodata) + "\n";
  for (int row = 0; row < r.height; ++row) {
    for (int col = 0; col < r.width; ++col) {
      if (col > 0) out += ' ';
      out += text::format_shortest(r.at(col, row));
    }
    out += '\n';
  }
  return out;
}

inline void write_ascii_grid(const Raster& r, const std::filesystem::path& path) {
  io::write_atomic(path, format_ascii_grid(r));
}

}  // namespace qsbd::geo
