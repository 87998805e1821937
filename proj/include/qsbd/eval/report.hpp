#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/core/io.hpp"
#include "qsbd/core/text.hpp"
#include "qsbd/eval/metrics.hpp"

namespace qsbd::eval {

struct PredictionRecord {
  std::string building_id;
  std::string city;
  double score = 0.0;
  int label = 0;
};

inline void to_json(nlohmann::json& j, const Confusion& c) {
  j = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

// +inf thresholds (no positive predicted) serialize as the string "inf".
inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = {{"threshold", std::isfinite(r.threshold) ? nlohmann::json(r.threshold) : nlohmann::json("inf")},
       {"confusion", r.confusion},
       {"precision", r.precision},
       {"recall", r.recall},
       {"f1", r.f1},
       {"kappa", r.kappa},
       {"auroc", r.auroc}};
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

inline std::string format_pm(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f ± %.3f", m.mean, m.std);
  return buf;
}

// Mean and sample standard deviation per metric.
inline std::map<std::string, MeanStd> aggregate_folds(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) throw Error(ErrorKind::kInvalidArgument, "aggregation needs at least two reports");
  const std::map<std::string, double EvalReport::*> fields{{"precision", &EvalReport::precision},
                                                           {"recall", &EvalReport::recall},
                                                           {"f1", &EvalReport::f1},
                                                           {"kappa", &EvalReport::kappa},
                                                           {"auroc", &EvalReport::auroc}};
  std::map<std::string, MeanStd> out;
  const double n = static_cast<double>(reports.size());
  for (const auto& [name, field] : fields) {
    double sum = 0.0;
    for (const auto& r : reports) sum += r.*field;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : reports) ss += (r.*field - mean) * (r.*field - mean);
    out[name] = {mean, std::sqrt(ss / (n - 1.0))};
  }
  return out;
}

inline nlohmann::json aggregate_json(const std::map<std::string, MeanStd>& agg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, m] : agg) j[name] = {{"mean", m.mean}, {"std", m.std}, {"text", format_pm(m)}};
  return j;
}

// Plain-text table of per-split metrics plus the aggregate row.
inline std::string format_table(const std::vector<std::string>& names, const std::vector<EvalReport>& reports,
                                const std::map<std::string, MeanStd>* agg) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %9s %9s %9s %9s %9s %9s\n", "split", "threshold", "precision", "recall",
                "f1", "kappa", "auroc");
  os << line;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::snprintf(line, sizeof line, "%-16s %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f\n", names[i].c_str(), r.threshold,
                  r.precision, r.recall, r.f1, r.kappa, r.auroc);
    os << line;
  }
  if (agg) {
    os << "mean ± std:";
    for (const char* k : {"precision", "recall", "f1", "kappa", "auroc"}) os << "  " << k << " " << format_pm(agg->at(k));
    os << '\n';
  }
  return os.str();
}

inline std::string format_predictions_csv(const std::vector<PredictionRecord>& preds) {
  std::string out = "building_id,city,score,label\n";
  for (const auto& p : preds) {
    out += p.building_id + "," + p.city + "," + text::format_shortest(p.score) + "," + std::to_string(p.label) + "\n";
  }
  return out;
}

inline void write_predictions_csv(const std::vector<PredictionRecord>& preds, const std::filesystem::path& path) {
  io::write_atomic(path, format_predictions_csv(preds));
}

inline EvalReport evaluate(const std::vector<PredictionRecord>& preds) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& p : preds) {
    scores.push_back(p.score);
    labels.push_back(p.label);
  }
  return evaluate(scores, labels);
}

inline EvalReport report_at(const std::vector<PredictionRecord>& preds, double threshold) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& p : preds) {
    scores.push_back(p.score);
    labels.push_back(p.label);
  }
  return report_at(scores, labels, threshold);
}

}  // namespace qsbd::eval
