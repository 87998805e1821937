#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/core/io.hpp"
#include "qsbd/dataset/sampling.hpp"

namespace qsbd::data {

struct Sample {
  std::string building_id;
  std::string city;
  int label = 0;
  std::vector<float> sar;           // P*P, row-major
  std::vector<float> dsm;           // P*P
  std::vector<std::uint8_t> mask;   // P*P, 0/1
  std::vector<float> gem;           // G, normalized

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct CityCounts {
  std::size_t intact = 0;
  std::size_t damaged = 0;

  friend bool operator==(const CityCounts&, const CityCounts&) = default;
};

struct DatasetManifest {
  std::size_t patch_size = 32;
  std::vector<std::string> gem_columns;
  GemStats gem_norm;
  std::map<std::string, CityCounts> cities;
  std::uint64_t sampling_seed = 0;
  double sampling_ratio = 20.0;
  bool sar_db = false;
  bool dsm_relative = true;
  bool dsm_on_sar_grid = true;
  std::size_t record_count = 0;
  std::string samples_crc32;

  std::size_t gem_dim() const { return gem_columns.size(); }
};

struct SampleSet {
  DatasetManifest manifest;
  std::vector<Sample> samples;

  std::vector<int> labels() const {
    std::vector<int> y;
    y.reserve(samples.size());
    for (const auto& s : samples) y.push_back(s.label);
    return y;
  }
  std::vector<std::string> cities() const {
    std::vector<std::string> c;
    c.reserve(samples.size());
    for (const auto& s : samples) c.push_back(s.city);
    return c;
  }
};

inline nlohmann::json manifest_json(const DatasetManifest& m) {
  nlohmann::json cities = nlohmann::json::object();
  for (const auto& [name, c] : m.cities) cities[name] = {{"intact", c.intact}, {"damaged", c.damaged}};
  std::vector<int> constant(m.gem_norm.constant.begin(), m.gem_norm.constant.end());
  return {{"format", "qsbd-samples"},
          {"version", 1},
          {"patch_size", m.patch_size},
          {"gem_dim", m.gem_dim()},
          {"gem_columns", m.gem_columns},
          {"gem_norm", {{"mean", m.gem_norm.mean}, {"std", m.gem_norm.std}, {"constant", constant}}},
          {"cities", cities},
          {"sampling", {{"seed", m.sampling_seed}, {"ratio", m.sampling_ratio}}},
          {"sar_db", m.sar_db},
          {"dsm_relative", m.dsm_relative},
          {"dsm_on_sar_grid", m.dsm_on_sar_grid},
          {"record_count", m.record_count},
          {"samples_file", "samples.bin"},
          {"samples_crc32", m.samples_crc32}};
}

inline DatasetManifest parse_manifest(const nlohmann::json& j) {
  try {
    if (j.at("format") != "qsbd-samples") throw Error(ErrorKind::kManifestMismatch, "not a sample store manifest");
    DatasetManifest m;
    m.patch_size = j.at("patch_size").get<std::size_t>();
    m.gem_columns = j.at("gem_columns").get<std::vector<std::string>>();
    const auto& norm = j.at("gem_norm");
    m.gem_norm.mean = norm.at("mean").get<std::vector<double>>();
    m.gem_norm.std = norm.at("std").get<std::vector<double>>();
    for (int c : norm.at("constant").get<std::vector<int>>()) m.gem_norm.constant.push_back(c != 0);
    for (const auto& [name, c] : j.at("cities").items()) {
      m.cities[name] = {c.at("intact").get<std::size_t>(), c.at("damaged").get<std::size_t>()};
    }
    m.sampling_seed = j.at("sampling").at("seed").get<std::uint64_t>();
    m.sampling_ratio = j.at("sampling").at("ratio").get<double>();
    m.sar_db = j.at("sar_db").get<bool>();
    m.dsm_relative = j.at("dsm_relative").get<bool>();
    m.dsm_on_sar_grid = j.at("dsm_on_sar_grid").get<bool>();
    m.record_count = j.at("record_count").get<std::size_t>();
    m.samples_crc32 = j.at("samples_crc32").get<std::string>();
    if (j.at("gem_dim").get<std::size_t>() != m.gem_dim() || m.gem_norm.mean.size() != m.gem_dim() ||
        m.gem_norm.std.size() != m.gem_dim() || m.gem_norm.constant.size() != m.gem_dim()) {
      throw Error(ErrorKind::kManifestMismatch, "exposure dimension disagrees across manifest fields");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kManifestMismatch, std::string("manifest: ") + e.what());
  }
}

inline std::map<std::string, CityCounts> count_by_city(const std::vector<Sample>& samples) {
  std::map<std::string, CityCounts> out;
  for (const auto& s : samples) (s.label ? out[s.city].damaged : out[s.city].intact)++;
  return out;
}

namespace detail {
inline constexpr char kStoreMagic[] = "QSBS";
}

// samples.bin: "QSBS" | u32 version | u32 count | u32 patch | u32 G | records, each
// u16+city | u16+building_id | u8 label | sar f32[P*P] | dsm f32[P*P] | mask u8[P*P] | gem f32[G].
inline std::vector<std::uint8_t> encode_samples(const std::vector<Sample>& samples, std::size_t patch, std::size_t g) {
  io::ByteWriter w;
  w.put_string(detail::kStoreMagic);
  w.put<std::uint32_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(samples.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(patch));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g));
  const std::size_t cells = patch * patch;
  for (const auto& s : samples) {
    if (s.sar.size() != cells || s.dsm.size() != cells || s.mask.size() != cells || s.gem.size() != g) {
      throw Error(ErrorKind::kShapeMismatch, "sample " + s.building_id + " does not match the store layout");
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(s.city.size()));
    w.put_string(s.city);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(s.building_id.size()));
    w.put_string(s.building_id);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.label));
    w.put_span<float>(s.sar);
    w.put_span<float>(s.dsm);
    w.put_span<std::uint8_t>(s.mask);
    w.put_span<float>(s.gem);
  }
  return std::move(w.bytes());
}

inline std::vector<Sample> decode_samples(std::span<const std::uint8_t> bytes, std::size_t patch, std::size_t g) {
  io::ByteReader r(bytes);
  if (r.get_string(4) != detail::kStoreMagic) throw Error(ErrorKind::kManifestMismatch, "samples.bin: bad magic");
  if (r.get<std::uint32_t>() != 1) throw Error(ErrorKind::kManifestMismatch, "samples.bin: unsupported version");
  const std::size_t count = r.get<std::uint32_t>();
  if (r.get<std::uint32_t>() != patch || r.get<std::uint32_t>() != g) {
    throw Error(ErrorKind::kManifestMismatch, "samples.bin layout differs from manifest");
  }
  const std::size_t cells = patch * patch;
  std::vector<Sample> out(count);
  for (auto& s : out) {
    s.city = r.get_string(r.get<std::uint16_t>());
    s.building_id = r.get_string(r.get<std::uint16_t>());
    s.label = r.get<std::uint8_t>();
    s.sar.resize(cells);
    s.dsm.resize(cells);
    s.mask.resize(cells);
    s.gem.resize(g);
    r.get_span<float>(s.sar);
    r.get_span<float>(s.dsm);
    r.get_span<std::uint8_t>(s.mask);
    r.get_span<float>(s.gem);
  }
  if (r.remaining() != 0) throw Error(ErrorKind::kManifestMismatch, "samples.bin has trailing bytes");
  return out;
}

inline void sort_samples(std::vector<Sample>& samples) {
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    return a.city != b.city ? a.city < b.city : a.building_id < b.building_id;
  });
}

// Writes samples.bin then manifest.json. Samples are sorted by (city, building_id)
// first, so producers may hand them over in any order.
inline void write_store(SampleSet& set, const std::filesystem::path& dir) {
  sort_samples(set.samples);
  std::filesystem::create_directories(dir);
  auto& m = set.manifest;
  const auto bytes = encode_samples(set.samples, m.patch_size, m.gem_dim());
  m.record_count = set.samples.size();
  m.cities = count_by_city(set.samples);
  m.samples_crc32 = io::hex32(io::crc32(bytes));
  io::write_atomic(dir / "samples.bin", bytes);
  io::write_atomic(dir / "manifest.json", manifest_json(m).dump(2) + "\n");
}

inline SampleSet read_store(const std::filesystem::path& dir) {
  SampleSet set;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kManifestMismatch, std::string("manifest.json: ") + e.what());
  }
  set.manifest = parse_manifest(j);
  const auto bytes = io::read_bytes(dir / "samples.bin");
  if (io::hex32(io::crc32(bytes)) != set.manifest.samples_crc32) {
    throw Error(ErrorKind::kManifestMismatch, "samples.bin checksum differs from manifest");
  }
  try {
    set.samples = decode_samples(bytes, set.manifest.patch_size, set.manifest.gem_dim());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kManifestMismatch) throw;
    throw Error(ErrorKind::kManifestMismatch, e.what());
  }
  if (set.samples.size() != set.manifest.record_count) {
    throw Error(ErrorKind::kManifestMismatch, "record count differs from manifest");
  }
  if (count_by_city(set.samples) != set.manifest.cities) {
    throw Error(ErrorKind::kManifestMismatch, "per-city counts differ from manifest");
  }
  return set;
}

}  // namespace qsbd::data
