#pragma once

// Subcommand bodies behind the qsbd executable. Each takes a fully resolved
// options struct; argument parsing lives in tools/qsbd.cpp.

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/dataset/build.hpp"
#include "qsbd/dataset/store.hpp"
#include "qsbd/eval/report.hpp"
#include "qsbd/synth/campaign.hpp"
#include "qsbd/training/protocol.hpp"

namespace qsbd::cli {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "1.0.0";

// ---- option structs -------------------------------------------------------

struct SynthGenOptions {
  fs::path out;
  std::size_t cities = 2;
  std::uint64_t seed = 0;
  std::string preset = "uniform";  // uniform | table
  fs::path campaign;               // regenerate from an existing campaign.json
  synth::SceneConfig scene;        // template for every city
};

struct BuildOptions {
  fs::path scenes;
  fs::path out;
  data::BuildConfig build;
};

struct ModelOptions {
  std::string modalities = "sar,ftp,dsm,gem";
  std::string profile = "compact";
  train::TrainConfig train;
  double val_fraction = 0.15;
};

struct TrainOptions {
  fs::path dataset;
  fs::path out;
  ModelOptions model;
};

struct EvaluateOptions {
  fs::path checkpoint;
  fs::path dataset;
  fs::path out;
};

struct ProtocolOptions {
  fs::path dataset;
  fs::path out;
  std::size_t k = 5;
  std::uint64_t split_seed = 0;
  std::size_t jobs = 1;
  ModelOptions model;
};

struct PredictOptions {
  fs::path checkpoint;
  fs::path scene;
  fs::path out;
  std::optional<double> threshold;
};

inline void to_json(nlohmann::json& j, const SynthGenOptions& o) {
  j = {{"out", o.out.string()}, {"cities", o.cities},   {"seed", o.seed},
       {"preset", o.preset},    {"campaign", o.campaign.string()}, {"scene", o.scene}};
}
inline void from_json(const nlohmann::json& j, SynthGenOptions& o) {
  o.out = j.value("out", o.out.string());
  o.cities = j.value("cities", o.cities);
  o.seed = j.value("seed", o.seed);
  o.preset = j.value("preset", o.preset);
  o.campaign = j.value("campaign", o.campaign.string());
  if (j.contains("scene")) o.scene = j["scene"].get<synth::SceneConfig>();
}

inline void to_json(nlohmann::json& j, const BuildOptions& o) {
  j = {{"scenes", o.scenes.string()}, {"out", o.out.string()}, {"build", o.build}};
}
inline void from_json(const nlohmann::json& j, BuildOptions& o) {
  o.scenes = j.value("scenes", o.scenes.string());
  o.out = j.value("out", o.out.string());
  if (j.contains("build")) from_json(j["build"], o.build);
}

inline void to_json(nlohmann::json& j, const ModelOptions& o) {
  j = {{"modalities", o.modalities}, {"profile", o.profile}, {"train", o.train}, {"val_fraction", o.val_fraction}};
}
inline void from_json(const nlohmann::json& j, ModelOptions& o) {
  o.modalities = j.value("modalities", o.modalities);
  o.profile = j.value("profile", o.profile);
  if (j.contains("train")) from_json(j["train"], o.train);
  o.val_fraction = j.value("val_fraction", o.val_fraction);
}

inline void to_json(nlohmann::json& j, const TrainOptions& o) {
  j = {{"dataset", o.dataset.string()}, {"out", o.out.string()}, {"model", o.model}};
}
inline void from_json(const nlohmann::json& j, TrainOptions& o) {
  o.dataset = j.value("dataset", o.dataset.string());
  o.out = j.value("out", o.out.string());
  if (j.contains("model")) from_json(j["model"], o.model);
}

inline void to_json(nlohmann::json& j, const EvaluateOptions& o) {
  j = {{"checkpoint", o.checkpoint.string()}, {"dataset", o.dataset.string()}, {"out", o.out.string()}};
}
inline void from_json(const nlohmann::json& j, EvaluateOptions& o) {
  o.checkpoint = j.value("checkpoint", o.checkpoint.string());
  o.dataset = j.value("dataset", o.dataset.string());
  o.out = j.value("out", o.out.string());
}

inline void to_json(nlohmann::json& j, const ProtocolOptions& o) {
  j = {{"dataset", o.dataset.string()}, {"out", o.out.string()}, {"k", o.k},
       {"split_seed", o.split_seed},    {"jobs", o.jobs},         {"model", o.model}};
}
inline void from_json(const nlohmann::json& j, ProtocolOptions& o) {
  o.dataset = j.value("dataset", o.dataset.string());
  o.out = j.value("out", o.out.string());
  o.k = j.value("k", o.k);
  o.split_seed = j.value("split_seed", o.split_seed);
  o.jobs = j.value("jobs", o.jobs);
  if (j.contains("model")) from_json(j["model"], o.model);
}

inline void to_json(nlohmann::json& j, const PredictOptions& o) {
  j = {{"checkpoint", o.checkpoint.string()},
       {"scene", o.scene.string()},
       {"out", o.out.string()},
       {"threshold", o.threshold ? nlohmann::json(*o.threshold) : nlohmann::json(nullptr)}};
}
inline void from_json(const nlohmann::json& j, PredictOptions& o) {
  o.checkpoint = j.value("checkpoint", o.checkpoint.string());
  o.scene = j.value("scene", o.scene.string());
  o.out = j.value("out", o.out.string());
  if (j.contains("threshold")) {
    o.threshold = j["threshold"].is_null() ? std::nullopt : std::optional<double>(j["threshold"].get<double>());
  }
}

// A --config file overrides the flags key by key. Either the bare options object or
// a run.json (whose "config" member is used) is accepted.
template <typename Options>
void apply_config_file(Options& opts, const fs::path& path) {
  nlohmann::json patch;
  try {
    patch = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  if (patch.contains("config") && patch.contains("command")) patch = patch["config"];
  if (!patch.is_object()) throw Error(ErrorKind::kParse, path.string() + ": expected a JSON object");
  nlohmann::json merged = opts;
  merged.merge_patch(patch);
  try {
    opts = merged.get<Options>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigMismatch, path.string() + ": " + e.what());
  }
}

// ---- shared helpers -------------------------------------------------------

inline void write_json(const fs::path& path, const nlohmann::json& j) { io::write_atomic(path, j.dump(2) + "\n"); }

// run.json: the resolved options plus CRC-32 of every input file, sorted by path.
inline void write_run_record(const fs::path& path, const std::string& command, const nlohmann::json& config,
                             std::vector<fs::path> inputs) {
  std::sort(inputs.begin(), inputs.end());
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& p : inputs) hashes[p.generic_string()] = io::file_crc32(p);
  write_json(path, {{"tool", "qsbd"}, {"version", kVersion}, {"command", command}, {"config", config},
                    {"inputs", hashes}});
}

inline std::vector<fs::path> dataset_files(const fs::path& dir) { return {dir / "manifest.json", dir / "samples.bin"}; }

inline nlohmann::json dataset_echo(const fs::path& dir, const data::SampleSet& set) {
  return {{"manifest_crc32", io::file_crc32(dir / "manifest.json")},
          {"samples_crc32", set.manifest.samples_crc32},
          {"record_count", set.samples.size()}};
}

inline fusion::FusionConfig fusion_config(const ModelOptions& m, const data::DatasetManifest& manifest) {
  const auto mods = fusion::parse_modalities(m.modalities);
  return fusion::FusionConfig::make(m.profile, mods, mods.gem ? manifest.gem_dim() : 0);
}

inline train::ProtocolConfig protocol_config(const ModelOptions& m, const data::DatasetManifest& manifest,
                                             std::size_t jobs) {
  if (!(m.val_fraction > 0.0 && m.val_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "validation fraction must be in (0, 1)");
  }
  train::ProtocolConfig pc;
  pc.fusion = fusion_config(m, manifest);
  pc.train = m.train;
  pc.val_fraction = m.val_fraction;
  pc.jobs = std::max<std::size_t>(jobs, 1);
  return pc;
}

// ---- subcommands ----------------------------------------------------------

inline synth::CampaignConfig cmd_synth_gen(const SynthGenOptions& o) {
  if (o.out.empty()) throw Error(ErrorKind::kInvalidArgument, "--out is required");
  synth::CampaignConfig cfg;
  if (!o.campaign.empty()) {
    cfg = synth::load_campaign(o.campaign);
  } else if (o.preset == "table") {
    cfg = synth::table_campaign(o.seed, o.scene);
  } else if (o.preset == "uniform") {
    cfg = synth::uniform_campaign(o.cities, o.scene, o.seed);
  } else {
    throw Error(ErrorKind::kInvalidArgument, "preset must be uniform or table, got '" + o.preset + "'");
  }
  const auto resolved = synth::generate_campaign(cfg, o.out);
  std::vector<fs::path> inputs;
  if (!o.campaign.empty()) inputs.push_back(o.campaign);
  write_run_record(o.out / "run.json", "synth-gen", o, inputs);
  return resolved;
}

inline data::SampleSet cmd_build_dataset(const BuildOptions& o) {
  if (o.scenes.empty() || o.out.empty()) throw Error(ErrorKind::kInvalidArgument, "--scenes and --out are required");
  if (o.build.patch_size < 1) throw Error(ErrorKind::kInvalidArgument, "patch size must be >= 1");
  const auto scenes = data::discover_scenes(o.scenes);
  auto set = data::build_dataset(scenes, o.build);
  data::write_store(set, o.out);
  std::vector<fs::path> inputs;
  for (const auto& s : scenes) {
    for (const auto& f : s.files()) inputs.push_back(f);
  }
  write_run_record(o.out / "run.json", "build-dataset", o, inputs);
  log::info("dataset: " + std::to_string(set.samples.size()) + " samples written to " + o.out.string());
  return set;
}

// Trains on a stratified share of the dataset and keeps the rest for early
// stopping. The validation best-F1 threshold is stored for predict.
inline train::TrainResult cmd_train(const TrainOptions& o) {
  if (o.dataset.empty() || o.out.empty()) throw Error(ErrorKind::kInvalidArgument, "--dataset and --out are required");
  const auto set = data::read_store(o.dataset);
  const auto pc = protocol_config(o.model, set.manifest, 1);
  const auto split = eval::stratified_holdout(set.labels(), pc.val_fraction, derive_seed(pc.train.seed, 7));
  auto result = train::train(set.samples, split.train, split.test, pc.fusion, pc.train, set.manifest.patch_size);

  auto [model, sc] = train::restore(result.checkpoint);
  const auto& ref = result.stats.epochs.back().val_f1 ? split.test : split.train;
  const auto scores = train::predict_scores(model, set.samples, ref, sc, set.manifest.patch_size);
  const auto preds = train::to_predictions(set.samples, ref, scores);
  const auto report = eval::evaluate(preds);
  result.checkpoint.metadata["threshold"] = report.threshold;
  result.checkpoint.metadata["threshold_source"] = result.stats.epochs.back().val_f1 ? "validation" : "training";
  result.checkpoint.metadata["dataset"] = data::manifest_json(set.manifest);
  nn::save_checkpoint(result.checkpoint, o.out);

  auto run = o.out;
  run += ".run.json";
  write_run_record(run, "train", o, dataset_files(o.dataset));
  log::info("checkpoint written to " + o.out.string() + " (best epoch " + std::to_string(result.stats.best_epoch) +
            ", threshold " + text::format_shortest(report.threshold) + ")");
  return result;
}

inline nlohmann::json cmd_evaluate(const EvaluateOptions& o) {
  if (o.checkpoint.empty() || o.dataset.empty() || o.out.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "--checkpoint, --dataset and --out are required");
  }
  const auto set = data::read_store(o.dataset);
  const auto ckpt = nn::load_checkpoint(o.checkpoint);
  auto [model, sc] = train::restore(ckpt);
  if (model.config().modalities.gem && model.config().gem_dim != set.manifest.gem_dim()) {
    throw Error(ErrorKind::kConfigMismatch, "checkpoint expects " + std::to_string(model.config().gem_dim) +
                                                " exposure features, dataset has " +
                                                std::to_string(set.manifest.gem_dim()));
  }
  if (ckpt.metadata.value("patch_size", set.manifest.patch_size) != set.manifest.patch_size) {
    throw Error(ErrorKind::kConfigMismatch, "checkpoint patch size differs from dataset");
  }
  std::vector<std::size_t> all(set.samples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto preds = train::to_predictions(set.samples, all,
                                           train::predict_scores(model, set.samples, all, sc, set.manifest.patch_size));
  nlohmann::json report = {{"protocol", "evaluate"},
                           {"metrics", eval::evaluate(preds)},
                           {"config", o},
                           {"model", ckpt.config},
                           {"dataset", dataset_echo(o.dataset, set)}};
  if (ckpt.metadata.contains("threshold")) {
    report["fixed_threshold_metrics"] = eval::report_at(preds, ckpt.metadata["threshold"].get<double>());
  }
  write_json(o.out / "report.json", report);
  eval::write_predictions_csv(preds, o.out / "predictions.csv");
  auto inputs = dataset_files(o.dataset);
  inputs.push_back(o.checkpoint);
  write_run_record(o.out / "run.json", "evaluate", o, inputs);
  return report;
}

inline nlohmann::json run_protocol(const ProtocolOptions& o, const std::string& command) {
  if (o.dataset.empty() || o.out.empty()) throw Error(ErrorKind::kInvalidArgument, "--dataset and --out are required");
  const auto set = data::read_store(o.dataset);
  const auto pc = protocol_config(o.model, set.manifest, o.jobs);
  const auto result = command == "loco" ? train::leave_one_city_out(set, pc)
                                        : train::cross_validate(set, o.k, o.split_seed, pc);
  auto report = train::result_json(result);
  // jobs changes scheduling only, so it is left out of the echo.
  nlohmann::json echo = o;
  echo.erase("jobs");
  report["config"] = echo;
  report["model"] = pc.fusion;
  report["dataset"] = dataset_echo(o.dataset, set);
  write_json(o.out / "report.json", report);
  eval::write_predictions_csv(result.predictions(), o.out / "predictions.csv");
  std::vector<std::string> names;
  for (const auto& f : result.folds) names.push_back(f.name);
  const auto agg = eval::aggregate_folds(result.reports());
  io::write_atomic(o.out / "table.txt", eval::format_table(names, result.reports(), &agg));
  write_run_record(o.out / "run.json", command, echo, dataset_files(o.dataset));
  return report;
}

inline nlohmann::json cmd_cross_validate(const ProtocolOptions& o) { return run_protocol(o, "cross-validate"); }
inline nlohmann::json cmd_loco(const ProtocolOptions& o) { return run_protocol(o, "loco"); }

// Scores every footprint of one city directory (sar.asc, dsm.asc, gem.csv,
// footprints.geojson) and writes the footprints back with damage_prob and damaged.
// A MultiPolygon building takes the highest probability over its parts.
inline std::size_t cmd_predict(const PredictOptions& o) {
  if (o.checkpoint.empty() || o.scene.empty() || o.out.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "--checkpoint, --scene and --out are required");
  }
  const auto ckpt = nn::load_checkpoint(o.checkpoint);
  auto [model, sc] = train::restore(ckpt);
  if (!ckpt.metadata.contains("dataset")) {
    throw Error(ErrorKind::kConfigMismatch, "checkpoint lacks dataset preprocessing metadata; train it with qsbd train");
  }
  const auto manifest = data::parse_manifest(ckpt.metadata["dataset"]);
  double threshold = 0.5;
  if (o.threshold) threshold = *o.threshold;
  else if (ckpt.metadata.contains("threshold")) threshold = ckpt.metadata["threshold"].get<double>();

  const auto in = data::SceneInputs::from_dir(o.scene.has_filename() ? o.scene : o.scene.parent_path());
  data::LoadedScene scene;
  scene.inputs = in;
  scene.sar = geo::read_ascii_grid(in.sar);
  scene.dsm = geo::read_ascii_grid(in.dsm);
  scene.gem = geo::read_point_table(in.gem);
  if (std::vector<std::string>(scene.gem.columns.begin(), scene.gem.columns.end()) != manifest.gem_columns) {
    throw Error(ErrorKind::kConfigMismatch, in.gem.string() + ": exposure columns differ from the training dataset");
  }
  const std::string footprints = io::read_text(in.footprints);
  scene.records = data::make_records(geo::parse_feature_collection(footprints, in.footprints.string()), in.city);
  data::join_gem(scene.records, scene.gem);

  data::BuildConfig bc;
  bc.patch_size = manifest.patch_size;
  bc.sar_db = manifest.sar_db;
  bc.dsm_relative = manifest.dsm_relative;
  bc.dsm_on_sar_grid = manifest.dsm_on_sar_grid;
  std::vector<data::Sample> samples;
  samples.reserve(scene.records.size());
  for (const auto& r : scene.records) samples.push_back(data::make_sample(scene, r, bc, manifest.gem_norm.apply(r.gem_vector)));
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto scores = train::predict_scores(model, samples, all, sc, manifest.patch_size);

  // Records follow the source features in order, one per polygon part.
  auto doc = nlohmann::json::parse(footprints);
  std::size_t next = 0;
  for (auto& f : doc["features"]) {
    const auto& geom = f["geometry"];
    const std::size_t parts = geom["type"] == "MultiPolygon" ? geom["coordinates"].size() : 1;
    double p = 0.0;
    for (std::size_t k = 0; k < parts; ++k) p = std::max(p, scores.at(next++));
    if (!f.contains("properties") || !f["properties"].is_object()) f["properties"] = nlohmann::json::object();
    f["properties"]["damage_prob"] = p;
    f["properties"]["damaged"] = p >= threshold;
  }
  io::write_atomic(o.out, doc.dump() + "\n");
  auto run = o.out;
  run += ".run.json";
  nlohmann::json echo = o;
  echo["threshold"] = threshold;
  write_run_record(run, "predict", echo, {o.checkpoint, in.sar, in.dsm, in.gem, in.footprints});
  log::info(std::to_string(doc["features"].size()) + " buildings scored, threshold " + text::format_shortest(threshold));
  return doc["features"].size();
}

}  // namespace qsbd::cli
