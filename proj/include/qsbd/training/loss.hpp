#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "qsbd/core/error.hpp"
#include "qsbd/nn/layers.hpp"

namespace qsbd::train {

inline constexpr double kProbClamp = 1e-7;

// L = -(1/N) sum [w*y*log(p) + (1-y)*log(1-p)] with p clamped to [eps, 1-eps].
inline double bce_loss(std::span<const int> labels, std::span<const double> probs, double eps = kProbClamp,
                       std::optional<double> pos_weight = std::nullopt) {
  if (labels.size() != probs.size()) {
    throw Error(ErrorKind::kLengthMismatch, std::to_string(labels.size()) + " labels vs " +
                                                std::to_string(probs.size()) + " probabilities");
  }
  if (labels.empty()) throw Error(ErrorKind::kLengthMismatch, "empty batch");
  const double w = pos_weight.value_or(1.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probs[i], eps, 1.0 - eps);
    sum += labels[i] ? w * std::log(p) : std::log(1.0 - p);
  }
  return -sum / static_cast<double>(labels.size());
}

// d L / d logit for L = bce(sigmoid(z)), unclamped: (w*y*(p-1) + (1-y)*p) / N,
// which is (p - y)/N when w = 1.
template <typename T>
std::vector<T> bce_logit_grad(std::span<const int> labels, std::span<const T> logits,
                              std::optional<double> pos_weight = std::nullopt) {
  if (labels.size() != logits.size()) throw Error(ErrorKind::kLengthMismatch, "labels vs logits");
  const double w = pos_weight.value_or(1.0);
  const double n = static_cast<double>(labels.size());
  std::vector<T> g(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = static_cast<double>(nn::sigmoid(logits[i]));
    g[i] = static_cast<T>((labels[i] ? w * (p - 1.0) : p) / n);
  }
  return g;
}

}  // namespace qsbd::train
