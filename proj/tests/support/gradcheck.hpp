#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qsbd/core/rng.hpp"
#include "qsbd/nn/tensor.hpp"

namespace qsbd::testing {

// Central finite-difference oracle. The scalar probe is L = sum(r * forward()) with a
// fixed random r, so the analytic gradient is whatever backward(r) produces.
struct GradTarget {
  std::string name;
  nn::Tensor<double>* value;
  nn::Tensor<double>* grad;  // filled by backward
};

struct GradCheckReport {
  double worst_rel_error = 0.0;
  std::string worst_target;
  std::size_t coordinates = 0;
  std::size_t kink_retries = 0;
};

// Norm-based relative error. Gradient vectors with norm below `floor` are compared
// against the floor instead, so exactly-zero gradients are judged on absolute error.
inline constexpr double kNoiseFloor = 1e-5;

inline double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                             double floor = kNoiseFloor) {
  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn_ += numeric[i] * numeric[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nn_), floor});
  return std::sqrt(diff) / scale;
}

// `max_coords` caps how many coordinates per target are perturbed (sampled uniformly).
// A ReLU or max boundary inside [x-h, x+h] shows up as disagreeing one-sided
// differences; such coordinates are re-measured with h/100, keeping whichever step
// gives the more consistent halves (exactly-zero gradients favour the larger step).
inline GradCheckReport finite_difference_check(const std::function<nn::Tensor<double>()>& forward,
                                               const std::function<void(const nn::Tensor<double>&)>& backward,
                                               std::vector<GradTarget> targets, Rng& rng,
                                               std::size_t max_coords = 1u << 30, double step = 1e-6) {
  const nn::Tensor<double> y0 = forward();
  nn::Tensor<double> probe(y0.shape());
  for (auto& v : probe.values()) v = rng.uniform(-1.0, 1.0);
  for (auto& t : targets) t.grad->fill(0.0);
  backward(probe);

  auto loss = [&] {
    const auto y = forward();
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += probe[i] * y[i];
    return s;
  };

  const double center = loss();
  // A central difference carries roundoff near eps * sum|r*y| / h per coordinate; the
  // floor is set so that at the 1e-4 bound an error ten times that estimate still passes.
  double magnitude = 0.0;
  for (std::size_t i = 0; i < y0.size(); ++i) magnitude += std::abs(probe[i] * y0[i]);
  const double roundoff = std::numeric_limits<double>::epsilon() * magnitude / step;
  // Central difference at step h plus the gap between its one-sided halves.
  auto measure = [&](double& x, double h) {
    const double saved = x;
    x = saved + h;
    const double plus = loss();
    x = saved - h;
    const double minus = loss();
    x = saved;
    return std::pair{(plus - minus) / (2.0 * h), std::abs((plus - center) / h - (center - minus) / h)};
  };

  GradCheckReport report;
  for (auto& t : targets) {
    std::vector<std::size_t> coords(t.value->size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > max_coords) {
      rng.shuffle(coords);
      coords.resize(max_coords);
    }
    std::vector<double> analytic, numeric;
    for (std::size_t i : coords) {
      auto [central, gap] = measure((*t.value)[i], step);
      if (gap > 1e-4 * std::max(std::abs(central), 1e-3)) {
        ++report.kink_retries;
        const auto [fine, fine_gap] = measure((*t.value)[i], step * 1e-2);
        if (fine_gap < gap) central = fine;
      }
      numeric.push_back(central);
      analytic.push_back((*t.grad)[i]);
    }
    report.coordinates += coords.size();
    const double floor = std::max(kNoiseFloor, 1e5 * roundoff * std::sqrt(static_cast<double>(coords.size())));
    const double err = relative_error(analytic, numeric, floor);
    if (err > report.worst_rel_error || report.worst_target.empty()) {
      report.worst_rel_error = std::max(report.worst_rel_error, err);
      report.worst_target = t.name;
    }
  }
  return report;
}

inline void randomize(nn::Tensor<double>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
}

}  // namespace qsbd::testing
