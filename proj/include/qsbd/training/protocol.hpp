#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/core/parallel.hpp"
#include "qsbd/eval/report.hpp"
#include "qsbd/eval/splits.hpp"
#include "qsbd/training/trainer.hpp"

namespace qsbd::train {

struct ProtocolConfig {
  fusion::FusionConfig fusion;
  TrainConfig train;
  double val_fraction = 0.15;  // inner validation share of each training split
  std::size_t jobs = 1;
};

inline void to_json(nlohmann::json& j, const ProtocolConfig& c) {
  j = {{"fusion", c.fusion}, {"train", c.train}, {"val_fraction", c.val_fraction}, {"jobs", c.jobs}};
}

struct FoldOutcome {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t train_size = 0, val_size = 0, test_size = 0;
  eval::EvalReport report;  // threshold from the test split's own PR curve
  // Threshold fixed beforehand from the inner validation predictions (training
  // predictions when validation lacks a class), then applied to the test split.
  eval::EvalReport fixed_threshold_report;
  std::vector<eval::PredictionRecord> predictions;
  TrainingStats stats;
};

struct ProtocolResult {
  std::string protocol;
  std::vector<FoldOutcome> folds;

  std::vector<eval::EvalReport> reports() const {
    std::vector<eval::EvalReport> r;
    for (const auto& f : folds) r.push_back(f.report);
    return r;
  }
  std::vector<eval::PredictionRecord> predictions() const {
    std::vector<eval::PredictionRecord> all;
    for (const auto& f : folds) all.insert(all.end(), f.predictions.begin(), f.predictions.end());
    return all;
  }
};

inline std::vector<eval::PredictionRecord> to_predictions(const std::vector<data::Sample>& samples,
                                                          const std::vector<std::size_t>& idx,
                                                          const std::vector<double>& scores) {
  std::vector<eval::PredictionRecord> out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& s = samples[idx[k]];
    out.push_back({s.building_id, s.city, scores[k], s.label});
  }
  return out;
}

// Trains on split.train (minus a stratified inner validation holdout) and scores split.test.
inline FoldOutcome run_split(const data::SampleSet& set, const eval::Split& split, const ProtocolConfig& cfg,
                             std::uint64_t seed) {
  const auto& samples = set.samples;
  std::vector<int> train_labels;
  for (auto i : split.train) train_labels.push_back(samples[i].label);
  const auto inner = eval::stratified_holdout(train_labels, cfg.val_fraction, derive_seed(seed, 7));
  std::vector<std::size_t> fit_idx, val_idx;
  for (auto k : inner.train) fit_idx.push_back(split.train[k]);
  for (auto k : inner.test) val_idx.push_back(split.train[k]);
  std::sort(fit_idx.begin(), fit_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  TrainConfig tc = cfg.train;
  tc.seed = seed;
  log::info(split.name + ": training on " + std::to_string(fit_idx.size()) + " (validation " +
            std::to_string(val_idx.size()) + "), testing on " + std::to_string(split.test.size()));
  auto result = train(samples, fit_idx, val_idx, cfg.fusion, tc, set.manifest.patch_size);
  auto [model, sc] = restore(result.checkpoint);

  FoldOutcome out;
  out.name = split.name;
  out.seed = seed;
  out.train_size = fit_idx.size();
  out.val_size = val_idx.size();
  out.test_size = split.test.size();
  out.stats = result.stats;
  out.predictions = to_predictions(samples, split.test, predict_scores(model, samples, split.test, sc,
                                                                          set.manifest.patch_size));
  out.report = eval::evaluate(out.predictions);

  const auto& ref_idx = result.stats.epochs.back().val_f1 ? val_idx : fit_idx;
  const auto ref = to_predictions(samples, ref_idx, predict_scores(model, samples, ref_idx, sc, set.manifest.patch_size));
  out.fixed_threshold_report = eval::report_at(out.predictions, eval::evaluate(ref).threshold);
  log::info(split.name + ": f1 " + text::format_shortest(out.report.f1) + ", auroc " +
            text::format_shortest(out.report.auroc));
  return out;
}

inline ProtocolResult run_splits(const data::SampleSet& set, const std::vector<eval::Split>& splits,
                                 const ProtocolConfig& cfg, std::string protocol) {
  cfg.fusion.validate();
  if (cfg.fusion.modalities.gem && cfg.fusion.gem_dim != set.manifest.gem_columns.size()) {
    throw Error(ErrorKind::kConfigMismatch, "model expects " + std::to_string(cfg.fusion.gem_dim) +
                                                " exposure features, dataset has " +
                                                std::to_string(set.manifest.gem_columns.size()));
  }
  ProtocolResult r;
  r.protocol = std::move(protocol);
  r.folds.resize(splits.size());
  parallel_for(splits.size(), cfg.jobs, [&](std::size_t i) {
    r.folds[i] = run_split(set, splits[i], cfg, derive_seed(cfg.train.seed, i));
  });
  return r;
}

inline ProtocolResult cross_validate(const data::SampleSet& set, std::size_t k, std::uint64_t split_seed,
                                     const ProtocolConfig& cfg) {
  return run_splits(set, eval::stratified_kfold(set.labels(), k, split_seed), cfg, "cross-validate");
}

inline ProtocolResult leave_one_city_out(const data::SampleSet& set, const ProtocolConfig& cfg) {
  return run_splits(set, eval::leave_one_city_out(set.cities()), cfg, "loco");
}

inline nlohmann::json fold_json(const FoldOutcome& f) {
  std::set<std::string> cities;
  for (const auto& p : f.predictions) cities.insert(p.city);
  return {{"name", f.name},
          {"seed", f.seed},
          {"train_size", f.train_size},
          {"val_size", f.val_size},
          {"test_size", f.test_size},
          {"test_cities", cities},
          {"report", f.report},
          {"fixed_threshold_report", f.fixed_threshold_report},
          {"best_epoch", f.stats.best_epoch},
          {"epochs_run", f.stats.epochs.size()},
          {"training", stats_json(f.stats)}};
}

// Schema: {protocol, metrics, fixed_threshold_metrics, folds}. Callers add the config
// echo and dataset hash.
inline nlohmann::json result_json(const ProtocolResult& r) {
  nlohmann::json folds = nlohmann::json::array();
  std::vector<eval::EvalReport> fixed;
  for (const auto& f : r.folds) {
    folds.push_back(fold_json(f));
    fixed.push_back(f.fixed_threshold_report);
  }
  nlohmann::json j = {{"protocol", r.protocol}, {"folds", folds}};
  if (r.folds.size() >= 2) {
    j["metrics"] = eval::aggregate_json(eval::aggregate_folds(r.reports()));
    j["fixed_threshold_metrics"] = eval::aggregate_json(eval::aggregate_folds(fixed));
  }
  return j;
}

}  // namespace qsbd::train
