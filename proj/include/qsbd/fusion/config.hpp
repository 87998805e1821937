#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/core/error.hpp"
#include "qsbd/core/text.hpp"
#include "qsbd/nn/resnet.hpp"

namespace qsbd::fusion {

enum class Modality { kSar, kFtp, kDsm, kGem };

inline const char* modality_name(Modality m) {
  switch (m) {
    case Modality::kSar: return "sar";
    case Modality::kFtp: return "ftp";
    case Modality::kDsm: return "dsm";
    case Modality::kGem: return "gem";
  }
  return "?";
}

// SAR and FTP are always on; DSM and GEM are switchable.
struct ModalitySet {
  bool dsm = false;
  bool gem = false;

  static ModalitySet all() { return {true, true}; }

  bool has(Modality m) const {
    switch (m) {
      case Modality::kSar:
      case Modality::kFtp: return true;
      case Modality::kDsm: return dsm;
      case Modality::kGem: return gem;
    }
    return false;
  }

  // Enabled modalities in concatenation order.
  std::vector<Modality> list() const {
    std::vector<Modality> out{Modality::kSar, Modality::kFtp};
    if (dsm) out.push_back(Modality::kDsm);
    if (gem) out.push_back(Modality::kGem);
    return out;
  }

  std::string str() const {
    std::string s;
    for (auto m : list()) s += (s.empty() ? "" : ",") + std::string(modality_name(m));
    return s;
  }

  friend bool operator==(const ModalitySet&, const ModalitySet&) = default;
};

// Parses "sar,ftp[,dsm][,gem]" in any order.
inline ModalitySet parse_modalities(const std::string& text) {
  ModalitySet set;
  bool sar = false, ftp = false;
  std::string item;
  auto take = [&](std::string token) {
    token = text::lower(text::trim(token));
    if (token == "sar") sar = true;
    else if (token == "ftp") ftp = true;
    else if (token == "dsm") set.dsm = true;
    else if (token == "gem") set.gem = true;
    else throw Error(ErrorKind::kInvalidArgument, "unknown modality '" + token + "'");
  };
  for (char c : text) {
    if (c == ',') {
      take(item);
      item.clear();
    } else {
      item += c;
    }
  }
  take(item);
  if (!sar || !ftp) throw Error(ErrorKind::kInvalidArgument, "modalities must include sar and ftp");
  return set;
}

struct FusionConfig {
  ModalitySet modalities;
  nn::EncoderConfig sar_encoder = nn::EncoderConfig::compact();
  nn::EncoderConfig ftp_encoder = nn::EncoderConfig::compact();
  nn::EncoderConfig dsm_encoder = nn::EncoderConfig::compact();
  std::size_t gem_dim = 0;
  std::vector<std::size_t> gem_widths{64, 64};
  std::size_t head_hidden = 256;
  double dropout = 0.5;

  static FusionConfig make(const std::string& profile, ModalitySet modalities, std::size_t gem_dim) {
    FusionConfig c;
    nn::EncoderConfig enc;
    if (profile == "compact") enc = nn::EncoderConfig::compact();
    else if (profile == "full") enc = nn::EncoderConfig::full();
    else throw Error(ErrorKind::kInvalidArgument, "profile must be compact or full, got '" + profile + "'");
    c.modalities = modalities;
    c.sar_encoder = c.ftp_encoder = c.dsm_encoder = enc;
    c.gem_dim = gem_dim;
    return c;
  }

  const nn::EncoderConfig& encoder(Modality m) const {
    switch (m) {
      case Modality::kSar: return sar_encoder;
      case Modality::kFtp: return ftp_encoder;
      default: return dsm_encoder;
    }
  }

  std::size_t fused_dim() const {
    std::size_t d = sar_encoder.embedding_dim + ftp_encoder.embedding_dim;
    if (modalities.dsm) d += dsm_encoder.embedding_dim;
    if (modalities.gem) d += gem_widths.back();
    return d;
  }

  void validate() const {
    sar_encoder.validate();
    ftp_encoder.validate();
    if (modalities.dsm) dsm_encoder.validate();
    if (modalities.gem) {
      if (gem_dim == 0) throw Error(ErrorKind::kInvalidArgument, "GEM enabled with zero-length exposure vector");
      if (gem_widths.empty()) throw Error(ErrorKind::kInvalidArgument, "GEM MLP needs at least one layer");
    }
    if (head_hidden == 0) throw Error(ErrorKind::kInvalidArgument, "head hidden width must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw Error(ErrorKind::kInvalidArgument, "dropout must be in [0, 1)");
  }

  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

inline void to_json(nlohmann::json& j, const FusionConfig& c) {
  j = {{"modalities", c.modalities.str()},
       {"sar_encoder", c.sar_encoder},
       {"ftp_encoder", c.ftp_encoder},
       {"dsm_encoder", c.dsm_encoder},
       {"gem_dim", c.gem_dim},
       {"gem_widths", c.gem_widths},
       {"head_hidden", c.head_hidden},
       {"dropout", c.dropout}};
}

inline void from_json(const nlohmann::json& j, FusionConfig& c) {
  c.modalities = parse_modalities(j.at("modalities").get<std::string>());
  c.sar_encoder = j.at("sar_encoder").get<nn::EncoderConfig>();
  c.ftp_encoder = j.at("ftp_encoder").get<nn::EncoderConfig>();
  c.dsm_encoder = j.at("dsm_encoder").get<nn::EncoderConfig>();
  c.gem_dim = j.at("gem_dim").get<std::size_t>();
  c.gem_widths = j.at("gem_widths").get<std::vector<std::size_t>>();
  c.head_hidden = j.at("head_hidden").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
}

}  // namespace qsbd::fusion
