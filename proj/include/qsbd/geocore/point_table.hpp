#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qsbd/core/error.hpp"
#include "qsbd/core/io.hpp"
#include "qsbd/core/text.hpp"
#include "qsbd/geocore/geotransform.hpp"

namespace qsbd::geo {

struct PointRecord {
  double x = 0.0;
  double y = 0.0;
  std::vector<double> attributes;
};

// Exposure table: header "x,y,<attr...>"; attribute order defines the vector layout.
struct PointTable {
  std::vector<std::string> columns;
  std::vector<PointRecord> records;

  std::size_t dim() const { return columns.size(); }
};

inline PointTable parse_point_table(std::string_view content, const std::string& source = "<memory>") {
  const auto lines = text::split_lines(content);
  auto split_csv = [](std::string_view line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        cells.emplace_back(text::trim(cell));
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.emplace_back(text::trim(cell));
    return cells;
  };

  std::size_t line_no = 0;
  std::string_view header_line;
  for (; line_no < lines.size(); ++line_no) {
    if (!text::trim(lines[line_no]).empty()) {
      header_line = lines[line_no];
      break;
    }
  }
  if (header_line.empty()) throw Error(ErrorKind::kParse, source + ": missing header row");
  std::string_view h = header_line;
  if (h.size() >= 3 && static_cast<unsigned char>(h[0]) == 0xEF && static_cast<unsigned char>(h[1]) == 0xBB &&
      static_cast<unsigned char>(h[2]) == 0xBF) {
    h.remove_prefix(3);
  }
  auto header = split_csv(h);
  if (header.size() < 2 || text::lower(header[0]) != "x" || text::lower(header[1]) != "y") {
    throw Error(ErrorKind::kParse, source + ":" + std::to_string(line_no + 1) + ": header must start with x,y");
  }
  PointTable table;
  table.columns.assign(header.begin() + 2, header.end());

  for (++line_no; line_no < lines.size(); ++line_no) {
    if (text::trim(lines[line_no]).empty()) continue;
    const auto cells = split_csv(lines[line_no]);
    const std::string where = source + ":" + std::to_string(line_no + 1);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::kParse, where + ": expected " + std::to_string(header.size()) + " columns");
    }
    std::vector<double> numbers;
    numbers.reserve(cells.size());
    for (const auto& c : cells) {
      auto v = text::parse_number<double>(c);
      if (!v || !std::isfinite(*v)) throw Error(ErrorKind::kParse, where + ": non-numeric cell '" + c + "'");
      numbers.push_back(*v);
    }
    table.records.push_back({numbers[0], numbers[1], {numbers.begin() + 2, numbers.end()}});
  }
  return table;
}

inline PointTable read_point_table(const std::filesystem::path& path) {
  return parse_point_table(io::read_text(path), path.string());
}

inline std::string format_point_table(const PointTable& table) {
  std::string out = "x,y";
  for (const auto& c : table.columns) out += "," + c;
  out += '\n';
  for (const auto& r : table.records) {
    if (r.attributes.size() != table.columns.size()) {
      throw Error(ErrorKind::kLengthMismatch, "point record attribute count differs from header");
    }
    out += text::format_shortest(r.x) + "," + text::format_shortest(r.y);
    for (double a : r.attributes) out += "," + text::format_shortest(a);
    out += '\n';
  }
  return out;
}

inline void write_point_table(const PointTable& table, const std::filesystem::path& path) {
  io::write_atomic(path, format_point_table(table));
}

// Index of the closest record; the lowest index wins ties.
inline std::size_t nearest_point(const Point& query, std::span<const PointRecord> table) {
  if (table.empty()) throw Error(ErrorKind::kEmptyTable, "nearest_point on an empty table");
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double dx = table[i].x - query.x;
    const double dy = table[i].y - query.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

}  // namespace qsbd::geo
