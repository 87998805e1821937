#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance runner. Kept deliberately naive and independent of library code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <vector>

#include "qsbd/core/rng.hpp"
#include "qsbd/eval/metrics.hpp"
#include "qsbd/geocore/polygon.hpp"

namespace qsbd::oracle {

struct PredCase {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Random prediction set with both classes and deliberate score ties.
inline PredCase random_pred_case(Rng& rng) {
  PredCase c;
  const std::size_t n = 2 + rng.index(60);
  const double grid = rng.uniform() < 0.5 ? 10.0 : 1000.0;
  for (std::size_t i = 0; i < n; ++i) {
    c.labels.push_back(rng.uniform() < 0.3 ? 1 : 0);
    c.scores.push_back(std::round(rng.uniform() * grid) / grid);
  }
  c.labels[0] = 1;
  c.labels[1] = 0;
  return c;
}

// O(P*N) pair counting, ties credited one half.
inline double pairwise_auroc(const PredCase& c) {
  double credit = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < c.labels.size(); ++i) {
    if (!c.labels[i]) continue;
    for (std::size_t j = 0; j < c.labels.size(); ++j) {
      if (c.labels[j]) continue;
      pairs += 1.0;
      if (c.scores[i] > c.scores[j]) credit += 1.0;
      else if (c.scores[i] == c.scores[j]) credit += 0.5;
    }
  }
  return credit / pairs;
}

// Exhaustive scan over every candidate threshold including both infinities.
inline eval::ThresholdResult scan_oracle(const PredCase& c) {
  std::set<double> cands(c.scores.begin(), c.scores.end());
  cands.insert(std::numeric_limits<double>::infinity());
  cands.insert(-std::numeric_limits<double>::infinity());
  eval::ThresholdResult best;
  bool first = true;
  for (auto it = cands.rbegin(); it != cands.rend(); ++it) {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < c.scores.size(); ++i) {
      const bool pred = c.scores[i] >= *it;
      if (c.labels[i] && pred) ++tp;
      else if (c.labels[i]) ++fn;
      else if (pred) ++fp;
      else ++tn;
    }
    const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    if (first || f > best.f1) best = {*it, p, r, f, {tp, fp, fn, tn}};
    first = false;
  }
  return best;
}

// Kappa straight from the definition, in long double.
inline double kappa_formula(const eval::Confusion& c) {
  const long double n = c.tp + c.fp + c.fn + c.tn;
  const long double po = (c.tp + c.tn) / n;
  const long double pe = ((c.tp + c.fp) / n) * ((c.tp + c.fn) / n) + ((c.fn + c.tn) / n) * ((c.fp + c.tn) / n);
  if (pe == 1.0L) return po == 1.0L ? 1.0 : 0.0;
  return static_cast<double>((po - pe) / (1.0L - pe));
}

// Textbook crossing-number test (pnpoly).
inline bool pnpoly(const geo::Ring& ring, double px, double py) {
  bool c = false;
  for (std::size_t i = 0, j = ring.size() - 2; i + 1 < ring.size(); j = i++) {
    const double xi = ring[i].x, yi = ring[i].y, xj = ring[j].x, yj = ring[j].y;
    if (((yi > py) != (yj > py)) && (px < (xj - xi) * (py - yi) / (yj - yi) + xi)) c = !c;
  }
  return c;
}

inline bool oracle_inside(const geo::Polygon& p, double px, double py) {
  bool c = pnpoly(p.exterior, px, py);
  for (const auto& h : p.holes) c ^= pnpoly(h, px, py);
  return c;
}

// True when the disc of radius r around (cx, cy) lies inside the ring: the center
// is inside and every edge is farther than r.
inline bool disc_inside(const geo::Ring& ring, double cx, double cy, double r) {
  if (!pnpoly(ring, cx, cy)) return false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double ax = ring[i].x, ay = ring[i].y, bx = ring[i + 1].x, by = ring[i + 1].y;
    const double dx = bx - ax, dy = by - ay;
    const double u = std::clamp(((cx - ax) * dx + (cy - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
    if (std::hypot(ax + u * dx - cx, ay + u * dy - cy) <= r) return false;
  }
  return true;
}

// Random star-shaped (possibly non-convex) simple polygon around (cx, cy).
inline geo::Polygon random_star(Rng& rng, double cx, double cy, double r_max, bool convex) {
  const int n = 3 + static_cast<int>(rng.index(10));
  std::vector<double> angles(n);
  for (auto& a : angles) a = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::sort(angles.begin(), angles.end());
  geo::Polygon p;
  for (double a : angles) {
    const double r = convex ? r_max : rng.uniform(0.3 * r_max, r_max);
    p.exterior.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  p.exterior.push_back(p.exterior.front());
  return p;
}

struct Rect {
  double x0, y0, x1, y1;
};

inline Rect random_rect(Rng& rng) {
  const double x = rng.uniform(0, 20), y = rng.uniform(0, 20);
  return {x, y, x + rng.uniform(0.5, 8), y + rng.uniform(0.5, 8)};
}

inline double overlap(const Rect& a, const Rect& b) {
  const double w = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double h = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  return w * h;
}

inline double area(const Rect& r) { return (r.x1 - r.x0) * (r.y1 - r.y0); }

// Damaged iff some destroyed rectangle covers >= ratio of the smaller area.
inline bool overlap_label(const Rect& f, const std::vector<Rect>& destroyed, double ratio = 0.5) {
  bool hit = false;
  for (const auto& d : destroyed) hit |= overlap(f, d) / std::min(area(f), area(d)) >= ratio;
  return hit;
}

}  // namespace qsbd::oracle
