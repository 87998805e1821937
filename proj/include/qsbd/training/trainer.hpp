#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/core/log.hpp"
#include "qsbd/core/rng.hpp"
#include "qsbd/eval/metrics.hpp"
#include "qsbd/nn/adam.hpp"
#include "qsbd/training/batch.hpp"
#include "qsbd/training/loss.hpp"

namespace qsbd::train {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  nn::AdamConfig adam;
  std::size_t patience = 10;
  double eps = kProbClamp;
  std::optional<double> pos_weight;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw Error(ErrorKind::kInvalidArgument, "batch size must be >= 1");
    if (max_epochs < 1) throw Error(ErrorKind::kInvalidArgument, "epochs must be >= 1");
    if (!(eps > 0.0 && eps < 0.1)) throw Error(ErrorKind::kInvalidArgument, "eps must be in (0, 0.1)");
    if (!(adam.lr > 0.0)) throw Error(ErrorKind::kInvalidArgument, "learning rate must be positive");
    if (pos_weight && !(*pos_weight > 0.0)) throw Error(ErrorKind::kInvalidArgument, "pos_weight must be positive");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size},
       {"max_epochs", c.max_epochs},
       {"lr", c.adam.lr},
       {"beta1", c.adam.beta1},
       {"beta2", c.adam.beta2},
       {"adam_eps", c.adam.eps},
       {"patience", c.patience},
       {"eps", c.eps},
       {"pos_weight", c.pos_weight ? nlohmann::json(*c.pos_weight) : nlohmann::json(nullptr)},
       {"seed", c.seed}};
}

// Missing keys keep their current values.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.adam.lr = j.value("lr", c.adam.lr);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.eps = j.value("adam_eps", c.adam.eps);
  c.patience = j.value("patience", c.patience);
  c.eps = j.value("eps", c.eps);
  if (j.contains("pos_weight")) {
    c.pos_weight = j["pos_weight"].is_null() ? std::nullopt : std::optional<double>(j["pos_weight"].get<double>());
  }
  c.seed = j.value("seed", c.seed);
}

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_f1;
  std::optional<double> val_auroc;
};

struct TrainingStats {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double wall_seconds = 0.0;
};

inline nlohmann::json stats_json(const TrainingStats& s) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : s.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_f1", e.val_f1 ? nlohmann::json(*e.val_f1) : nlohmann::json(nullptr)},
                      {"val_auroc", e.val_auroc ? nlohmann::json(*e.val_auroc) : nlohmann::json(nullptr)}});
  }
  return {{"epochs", epochs}, {"best_epoch", s.best_epoch}};
}

struct TrainResult {
  nn::Checkpoint checkpoint;
  InputScaling scaling;
  TrainingStats stats;
};

// Eval-mode scores for samples[idx], in idx order.
inline std::vector<double> predict_scores(fusion::FusionModel<float>& model, const std::vector<data::Sample>& samples,
                                          const std::vector<std::size_t>& idx, const InputScaling& sc,
                                          std::size_t patch, std::size_t batch_size = 256) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, idx.size() - start);
    const auto in = make_input<float>(samples, std::span(idx).subspan(start, n), sc, model.config().modalities, patch);
    for (float p : model.predict(in)) out.push_back(p);
  }
  return out;
}

// Mini-batch Adam on BCE. When the validation split holds both classes, the
// parameters of the epoch with the best validation F1 (AUROC breaks ties) are kept
// and training stops after `patience` epochs without improvement; otherwise the
// final epoch is returned.
inline TrainResult train(const std::vector<data::Sample>& samples, const std::vector<std::size_t>& train_idx,
                         const std::vector<std::size_t>& val_idx, const fusion::FusionConfig& fcfg,
                         const TrainConfig& cfg, std::size_t patch) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t pos = 0;
  for (auto i : train_idx) pos += static_cast<std::size_t>(samples[i].label);
  if (pos == 0 || pos == train_idx.size()) {
    throw Error(ErrorKind::kSingleClassTrainSet, "training split has " + std::to_string(pos) + " positives of " +
                                                     std::to_string(train_idx.size()));
  }
  std::vector<int> val_labels;
  for (auto i : val_idx) val_labels.push_back(samples[i].label);
  bool val_usable = !val_idx.empty();
  try {
    if (val_usable) eval::require_both_classes(val_labels);
  } catch (const Error&) {
    val_usable = false;
  }
  if (!val_usable) log::warn("validation split lacks a class; keeping the final epoch");

  TrainResult result;
  result.scaling = fit_scaling(samples, train_idx);
  fusion::FusionModel<float> model(fcfg);
  Rng init_rng(derive_seed(cfg.seed, 1));
  model.init(init_rng);
  Rng dropout_rng(derive_seed(cfg.seed, 2));
  auto refs = model.state();
  nn::AdamState<float> adam;

  std::vector<nn::NamedBlob> best_params = nn::export_tensors(refs);
  double best_f1 = -1.0, best_auroc = -1.0;
  std::size_t since_best = 0;
  std::vector<double> loss_history;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    Rng shuffle_rng(mix_seed(cfg.seed ^ static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      const auto idx = std::span(order).subspan(start, n);
      const auto in = make_input<float>(samples, idx, result.scaling, fcfg.modalities, patch);
      std::vector<int> y;
      for (auto i : idx) y.push_back(samples[i].label);
      model.zero_grad();
      const auto acts = model.forward(in, true, dropout_rng);
      std::vector<double> p(acts.prob.values().begin(), acts.prob.values().end());
      const double loss = bce_loss(y, p, cfg.eps, cfg.pos_weight);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::kDivergedLoss, "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                                  std::to_string(start / cfg.batch_size));
      }
      loss_sum += loss * static_cast<double>(n);
      const auto g = bce_logit_grad<float>(y, acts.logit.values(), cfg.pos_weight);
      model.backward(nn::Tensor<float>({n, 1}, g));
      adam_step(refs.params, adam, cfg.adam);
    }
    EpochStats es;
    es.epoch = epoch;
    es.train_loss = loss_sum / static_cast<double>(order.size());
    loss_history.push_back(es.train_loss);
    if (val_usable) {
      const auto scores = predict_scores(model, samples, val_idx, result.scaling, patch);
      es.val_f1 = eval::pr_best_f1_threshold(scores, val_labels).f1;
      es.val_auroc = eval::auroc(scores, val_labels);
    }
    log::debug("epoch " + std::to_string(epoch) + " loss " + std::to_string(es.train_loss) +
               (es.val_f1 ? " val_f1 " + std::to_string(*es.val_f1) : std::string()));
    result.stats.epochs.push_back(es);

    const bool improved = !val_usable || *es.val_f1 > best_f1 || (*es.val_f1 == best_f1 && *es.val_auroc > best_auroc);
    if (improved) {
      if (val_usable) {
        best_f1 = *es.val_f1;
        best_auroc = *es.val_auroc;
      }
      best_params = nn::export_tensors(refs);
      result.stats.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  nn::import_tensors(refs, best_params);
  result.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.checkpoint = model.to_checkpoint({{"epoch", result.stats.best_epoch},
                                           {"seed", cfg.seed},
                                           {"loss_history", loss_history},
                                           {"train", cfg},
                                           {"input_scaling", result.scaling},
                                           {"patch_size", patch}});
  return result;
}

// Rebuilds a model and its input scaling from a training checkpoint.
inline std::pair<fusion::FusionModel<float>, InputScaling> restore(const nn::Checkpoint& ckpt) {
  fusion::FusionConfig cfg;
  try {
    cfg = ckpt.config.get<fusion::FusionConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigMismatch, std::string("checkpoint config: ") + e.what());
  }
  fusion::FusionModel<float> model(cfg);
  model.load(ckpt);
  InputScaling sc;
  try {
    sc = ckpt.metadata.at("input_scaling").get<InputScaling>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigMismatch, std::string("checkpoint lacks input scaling: ") + e.what());
  }
  return {std::move(model), sc};
}

}  // namespace qsbd::train
