#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/core/io.hpp"
#include "qsbd/nn/tensor.hpp"

namespace qsbd::nn {

// Layout (little-endian):
//   "QSBD" | u32 version | u32 header_len | header JSON {"config","metadata"}
//   | u32 tensor_count | per tensor: u16 name_len, name, u8 rank, rank x u32 dims, u64 blob offset
//   | f32 blobs | u32 CRC-32 of all preceding bytes
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedBlob {
  std::string name;
  Shape shape;
  std::vector<float> values;

  friend bool operator==(const NamedBlob&, const NamedBlob&) = default;
};

struct Checkpoint {
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedBlob> tensors;

  const NamedBlob* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
};

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.put_string("QSBD");
  w.put<std::uint32_t>(kCheckpointVersion);
  const std::string header = nlohmann::json{{"config", ckpt.config}, {"metadata", ckpt.metadata}}.dump();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
  w.put_string(header);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  std::set<std::string> seen;
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    if (!seen.insert(t.name).second) throw Error(ErrorKind::kConfigMismatch, "duplicate tensor name " + t.name);
    if (shape_size(t.shape) != t.values.size()) throw Error(ErrorKind::kShapeMismatch, t.name + ": blob size");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_string(t.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put<std::uint64_t>(offset);
    offset += t.values.size() * sizeof(float);
  }
  for (const auto& t : ckpt.tensors) w.put_span(std::span<const float>(t.values));
  const std::uint32_t crc = io::crc32(w.bytes());
  w.put<std::uint32_t>(crc);
  return std::move(w.bytes());
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw Error(ErrorKind::kChecksumMismatch, "checkpoint truncated");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (io::crc32(bytes.first(bytes.size() - 4)) != stored) {
    throw Error(ErrorKind::kChecksumMismatch, "checkpoint CRC-32 mismatch");
  }
  io::ByteReader r(bytes.first(bytes.size() - 4));
  if (r.get_string(4) != "QSBD") throw Error(ErrorKind::kParse, "not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kConfigMismatch, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = r.get<std::uint32_t>();
  Checkpoint ckpt;
  try {
    auto header = nlohmann::json::parse(r.get_string(header_len));
    ckpt.config = header.at("config");
    ckpt.metadata = header.at("metadata");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("checkpoint header: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  std::vector<std::uint64_t> offsets;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedBlob t;
    t.name = r.get_string(r.get<std::uint16_t>());
    const auto rank = r.get<std::uint8_t>();
    for (std::uint8_t d = 0; d < rank; ++d) t.shape.push_back(r.get<std::uint32_t>());
    offsets.push_back(r.get<std::uint64_t>());
    ckpt.tensors.push_back(std::move(t));
  }
  const std::size_t blob_start = r.position();
  for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
    auto& t = ckpt.tensors[i];
    t.values.resize(shape_size(t.shape));
    r.seek(blob_start + offsets[i]);
    r.get_span(std::span<float>(t.values));
  }
  return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_atomic(path, encode_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_bytes(path));
}

// Parameters first, then buffers, in collection order.
template <typename T>
std::vector<NamedBlob> export_tensors(const StateRefs<T>& refs) {
  std::vector<NamedBlob> out;
  for (const auto* p : refs.params) {
    out.push_back({p->name, p->value.shape(), std::vector<float>(p->value.values().begin(), p->value.values().end())});
  }
  for (const auto* b : refs.buffers) {
    out.push_back({b->name, b->value.shape(), std::vector<float>(b->value.values().begin(), b->value.values().end())});
  }
  return out;
}

// Every model tensor must be present exactly once with a matching shape, and the
// checkpoint must not carry tensors the model does not own.
template <typename T>
void import_tensors(StateRefs<T>& refs, const std::vector<NamedBlob>& blobs) {
  std::map<std::string, const NamedBlob*> by_name;
  for (const auto& b : blobs) {
    if (!by_name.emplace(b.name, &b).second) throw Error(ErrorKind::kConfigMismatch, "duplicate tensor " + b.name);
  }
  std::size_t used = 0;
  auto assign = [&](const std::string& name, Tensor<T>& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error(ErrorKind::kConfigMismatch, "checkpoint lacks tensor " + name);
    if (it->second->shape != dst.shape()) {
      throw Error(ErrorKind::kConfigMismatch, name + ": checkpoint shape " + shape_string(it->second->shape) +
                                                  " vs model " + shape_string(dst.shape()));
    }
    std::copy(it->second->values.begin(), it->second->values.end(), dst.values().begin());
    ++used;
  };
  for (auto* p : refs.params) assign(p->name, p->value);
  for (auto* b : refs.buffers) assign(b->name, b->value);
  if (used != by_name.size()) throw Error(ErrorKind::kConfigMismatch, "checkpoint carries unknown tensors");
}

}  // namespace qsbd::nn
