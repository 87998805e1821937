#pragma once

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/dataset/store.hpp"
#include "qsbd/fusion/model.hpp"

namespace qsbd::train {

// Input standardization fitted on the training split: one scalar mean/std per
// raster modality and a per-feature re-standardization of the exposure vector.
struct InputScaling {
  double sar_mean = 0.0, sar_std = 1.0;
  double dsm_mean = 0.0, dsm_std = 1.0;
  data::GemStats gem;

  friend bool operator==(const InputScaling& a, const InputScaling& b) {
    return a.sar_mean == b.sar_mean && a.sar_std == b.sar_std && a.dsm_mean == b.dsm_mean &&
           a.dsm_std == b.dsm_std && a.gem.mean == b.gem.mean && a.gem.std == b.gem.std &&
           a.gem.constant == b.gem.constant;
  }
};

inline void to_json(nlohmann::json& j, const InputScaling& s) {
  std::vector<int> constant(s.gem.constant.begin(), s.gem.constant.end());
  j = {{"sar_mean", s.sar_mean}, {"sar_std", s.sar_std}, {"dsm_mean", s.dsm_mean}, {"dsm_std", s.dsm_std},
       {"gem_mean", s.gem.mean}, {"gem_std", s.gem.std}, {"gem_constant", constant}};
}

inline void from_json(const nlohmann::json& j, InputScaling& s) {
  s.sar_mean = j.at("sar_mean").get<double>();
  s.sar_std = j.at("sar_std").get<double>();
  s.dsm_mean = j.at("dsm_mean").get<double>();
  s.dsm_std = j.at("dsm_std").get<double>();
  s.gem.mean = j.at("gem_mean").get<std::vector<double>>();
  s.gem.std = j.at("gem_std").get<std::vector<double>>();
  s.gem.constant.clear();
  for (int c : j.at("gem_constant").get<std::vector<int>>()) s.gem.constant.push_back(c != 0);
}

namespace detail {

inline void pixel_moments(const std::vector<data::Sample>& samples, const std::vector<std::size_t>& idx,
                          std::vector<float> data::Sample::*field, double& mean, double& stddev) {
  double sum = 0.0, sq = 0.0, n = 0.0;
  for (auto i : idx) {
    for (float v : samples[i].*field) {
      sum += v;
      sq += static_cast<double>(v) * v;
    }
    n += static_cast<double>((samples[i].*field).size());
  }
  mean = n > 0 ? sum / n : 0.0;
  const double var = n > 0 ? sq / n - mean * mean : 0.0;
  stddev = var > 1e-24 ? std::sqrt(var) : 1.0;
}

}  // namespace detail

inline InputScaling fit_scaling(const std::vector<data::Sample>& samples, const std::vector<std::size_t>& train_idx) {
  InputScaling s;
  detail::pixel_moments(samples, train_idx, &data::Sample::sar, s.sar_mean, s.sar_std);
  detail::pixel_moments(samples, train_idx, &data::Sample::dsm, s.dsm_mean, s.dsm_std);
  std::vector<std::vector<double>> rows;
  for (auto i : train_idx) rows.emplace_back(samples[i].gem.begin(), samples[i].gem.end());
  if (!rows.empty() && !rows.front().empty() && rows.size() >= 2) {
    s.gem = data::fit_gem_stats(rows);
  } else {
    const std::size_t g = rows.empty() ? 0 : rows.front().size();
    s.gem = {std::vector<double>(g, 0.0), std::vector<double>(g, 1.0), std::vector<bool>(g, false)};
  }
  return s;
}

// Assembles the enabled modalities of samples[idx] into one batch.
template <typename T>
fusion::FusionInput<T> make_input(const std::vector<data::Sample>& samples, std::span<const std::size_t> idx,
                                  const InputScaling& sc, const fusion::ModalitySet& mods, std::size_t patch) {
  const std::size_t b = idx.size(), cells = patch * patch;
  fusion::FusionInput<T> in;
  in.sar = nn::Tensor<T>({b, 1, patch, patch});
  in.ftp = nn::Tensor<T>({b, 1, patch, patch});
  if (mods.dsm) in.dsm = nn::Tensor<T>({b, 1, patch, patch});
  const std::size_t g = sc.gem.dim();
  if (mods.gem) in.gem = nn::Tensor<T>({b, g});
  const double sar_inv = 1.0 / sc.sar_std, dsm_inv = 1.0 / sc.dsm_std;
  for (std::size_t k = 0; k < b; ++k) {
    const auto& s = samples[idx[k]];
    if (s.sar.size() != cells) throw Error(ErrorKind::kShapeMismatch, s.building_id + ": patch size");
    T* sar = in.sar.data() + k * cells;
    T* ftp = in.ftp.data() + k * cells;
    for (std::size_t i = 0; i < cells; ++i) {
      sar[i] = static_cast<T>((s.sar[i] - sc.sar_mean) * sar_inv);
      ftp[i] = static_cast<T>(s.mask[i]);
    }
    if (mods.dsm) {
      T* dsm = in.dsm.data() + k * cells;
      for (std::size_t i = 0; i < cells; ++i) dsm[i] = static_cast<T>((s.dsm[i] - sc.dsm_mean) * dsm_inv);
    }
    if (mods.gem) {
      if (s.gem.size() != g) throw Error(ErrorKind::kDimensionMismatch, s.building_id + ": exposure length");
      const auto z = sc.gem.apply(std::vector<double>(s.gem.begin(), s.gem.end()));
      for (std::size_t i = 0; i < g; ++i) in.gem.data()[k * g + i] = static_cast<T>(z[i]);
    }
  }
  return in;
}

}  // namespace qsbd::train
