#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qsbd/core/rng.hpp"
#include "qsbd/dataset/records.hpp"

namespace qsbd::data {

// Keeps every damaged record and, per city, min(floor(ratio * damaged), intact)
// intact records drawn uniformly without replacement. The draw depends only on the
// seed, the city name and the record ids, not on input order. Output is sorted by
// (city, id).
inline std::vector<BuildingRecord> sample_negatives(const std::vector<BuildingRecord>& records, double ratio,
                                                    std::uint64_t seed) {
  if (!(ratio >= 1.0)) throw Error(ErrorKind::kInvalidArgument, "sampling ratio must be >= 1");
  std::map<std::string, std::vector<const BuildingRecord*>> damaged, intact;
  for (const auto& r : records) (r.label ? damaged : intact)[r.city].push_back(&r);
  std::vector<BuildingRecord> out;
  auto by_id = [](const BuildingRecord* a, const BuildingRecord* b) { return a->id < b->id; };
  std::map<std::string, bool> cities;
  for (const auto& r : records) cities[r.city] = true;
  for (const auto& [city, _] : cities) {
    auto& pos = damaged[city];
    auto& neg = intact[city];
    std::sort(neg.begin(), neg.end(), by_id);
    const auto quota = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(pos.size())));
    const std::size_t take = std::min(quota, neg.size());
    Rng rng(derive_seed(seed, hash_string(city)));
    for (std::size_t i = 0; i < take; ++i) std::swap(neg[i], neg[i + rng.index(neg.size() - i)]);
    for (const auto* p : pos) out.push_back(*p);
    for (std::size_t i = 0; i < take; ++i) out.push_back(*neg[i]);
  }
  std::sort(out.begin(), out.end(), [](const BuildingRecord& a, const BuildingRecord& b) {
    return a.city != b.city ? a.city < b.city : a.id < b.id;
  });
  return out;
}

struct GemStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> constant;

  std::size_t dim() const { return mean.size(); }

  std::vector<float> apply(const std::vector<double>& raw) const {
    if (raw.size() != mean.size()) throw Error(ErrorKind::kDimensionMismatch, "exposure vector length");
    std::vector<float> out(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
      out[k] = constant[k] ? 0.0f : static_cast<float>((raw[k] - mean[k]) / std[k]);
    }
    return out;
  }
};

inline constexpr double kConstantFeatureStd = 1e-12;

// Population mean/std per feature over `rows`; features with std below 1e-12 are
// flagged constant and map to 0.
inline GemStats fit_gem_stats(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw Error(ErrorKind::kInvalidArgument, "exposure normalization needs >= 2 records");
  const std::size_t g = rows.front().size();
  GemStats s;
  s.mean.assign(g, 0.0);
  s.std.assign(g, 0.0);
  s.constant.assign(g, false);
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    if (r.size() != g) throw Error(ErrorKind::kDimensionMismatch, "exposure vectors differ in length");
    for (std::size_t k = 0; k < g; ++k) s.mean[k] += r[k];
  }
  for (auto& m : s.mean) m /= n;
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < g; ++k) s.std[k] += (r[k] - s.mean[k]) * (r[k] - s.mean[k]);
  }
  for (std::size_t k = 0; k < g; ++k) {
    s.std[k] = std::sqrt(s.std[k] / n);
    s.constant[k] = s.std[k] < kConstantFeatureStd;
  }
  return s;
}

// Fits statistics over all records and returns their z-scored exposure vectors.
inline std::pair<std::vector<std::vector<float>>, GemStats> normalize_gem(const std::vector<BuildingRecord>& records) {
  std::vector<std::vector<double>> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(r.gem_vector);
  GemStats stats = fit_gem_stats(rows);
  std::vector<std::vector<float>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(stats.apply(r));
  return {std::move(out), std::move(stats)};
}

}  // namespace qsbd::data
