#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qsbd/core/error.hpp"

namespace qsbd::eval {

struct Confusion {
  long tp = 0, fp = 0, fn = 0, tn = 0;

  long total() const { return tp + fp + fn + tn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

inline double precision(const Confusion& c) {
  return c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
}

inline double recall(const Confusion& c) {
  return c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
}

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

// Chance-corrected agreement; when p_e = 1 the result is 1 for perfect agreement, else 0.
inline double cohen_kappa(const Confusion& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0 || c.tn < 0) throw Error(ErrorKind::kInvalidArgument, "negative confusion count");
  if (c.total() == 0) throw Error(ErrorKind::kEmptyConfusion, "confusion matrix is empty");
  const double n = static_cast<double>(c.total());
  const double po = static_cast<double>(c.tp + c.tn) / n;
  const double pred_pos = static_cast<double>(c.tp + c.fp) / n, true_pos = static_cast<double>(c.tp + c.fn) / n;
  const double pe = pred_pos * true_pos + (1.0 - pred_pos) * (1.0 - true_pos);
  if (pe == 1.0) return po == 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

inline void require_both_classes(std::span<const int> labels) {
  long pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorKind::kInvalidArgument, "labels must be 0 or 1");
    pos += y;
  }
  if (pos == 0 || pos == static_cast<long>(labels.size())) {
    throw Error(ErrorKind::kSingleClassEvalSet, "evaluation set needs both classes");
  }
}

inline void require_same_length(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::kLengthMismatch, std::to_string(scores.size()) + " scores vs " +
                                                std::to_string(labels.size()) + " labels");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorKind::kInvalidArgument, "non-finite score");
  }
}

// Positive iff score >= t.
inline Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double t) {
  require_same_length(scores, labels);
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= t;
    if (labels[i]) (pred ? c.tp : c.fn)++;
    else (pred ? c.fp : c.tn)++;
  }
  return c;
}

struct ThresholdResult {
  double threshold = std::numeric_limits<double>::infinity();
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion confusion;
};

// Sweeps every distinct score (and +inf) from high to low; the first maximum wins,
// so ties resolve toward the largest threshold.
inline ThresholdResult pr_best_f1_threshold(std::span<const double> scores, std::span<const int> labels) {
  require_same_length(scores, labels);
  require_both_classes(labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  long total_pos = 0;
  for (int y : labels) total_pos += y;
  const long total_neg = static_cast<long>(labels.size()) - total_pos;

  ThresholdResult best;
  best.confusion = {0, 0, total_pos, total_neg};
  Confusion c = best.confusion;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) {
      if (labels[order[i]]) {
        ++c.tp;
        --c.fn;
      } else {
        ++c.fp;
        --c.tn;
      }
    }
    const double p = precision(c), r = recall(c), f = f1_score(p, r);
    if (f > best.f1) best = {t, p, r, f, c};
  }
  return best;
}

// Mann-Whitney estimate with midranks for ties.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
  require_same_length(scores, labels);
  require_both_classes(labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  long pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += midrank;
        ++pos;
      }
    }
    i = j;
  }
  const double np = static_cast<double>(pos), nn = static_cast<double>(static_cast<long>(n) - pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

struct EvalReport {
  double threshold = 0.0;
  Confusion confusion;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
  double auroc = 0.0;
};

inline EvalReport report_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  require_both_classes(labels);
  EvalReport r;
  r.threshold = threshold;
  r.confusion = confusion_at(scores, labels, threshold);
  r.precision = precision(r.confusion);
  r.recall = recall(r.confusion);
  r.f1 = f1_score(r.precision, r.recall);
  r.kappa = cohen_kappa(r.confusion);
  r.auroc = auroc(scores, labels);
  return r;
}

// Metrics at the best-F1 threshold of these predictions.
inline EvalReport evaluate(std::span<const double> scores, std::span<const int> labels) {
  const ThresholdResult best = pr_best_f1_threshold(scores, labels);
  EvalReport r;
  r.threshold = best.threshold;
  r.confusion = best.confusion;
  r.precision = best.precision;
  r.recall = best.recall;
  r.f1 = best.f1;
  r.kappa = cohen_kappa(best.confusion);
  r.auroc = auroc(scores, labels);
  return r;
}

}  // namespace qsbd::eval
