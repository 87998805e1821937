#pragma once

#include <cmath>
#include <vector>

#include "qsbd/nn/tensor.hpp"

namespace qsbd::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  long step = 0;
};

// One bias-corrected Adam update over every parameter in `params`.
template <typename T>
void adam_step(std::vector<Parameter<T>*>& params, AdamState<T>& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.emplace_back(p->value.size(), T{0});
      state.v.emplace_back(p->value.size(), T{0});
    }
  }
  if (state.m.size() != params.size()) throw Error(ErrorKind::kShapeMismatch, "adam state/parameter count");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p.value.size()) throw Error(ErrorKind::kShapeMismatch, p.name + ": adam state shape");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const T g = p.grad[i];
      m[i] = b1 * m[i] + (T{1} - b1) * g;
      v[i] = b2 * v[i] + (T{1} - b2) * g * g;
      const double m_hat = static_cast<double>(m[i]) / c1;
      const double v_hat = static_cast<double>(v[i]) / c2;
      p.value[i] -= static_cast<T>(cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
  }
}

}  // namespace qsbd::nn
