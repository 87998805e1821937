// qsbd: synthetic scene generation, dataset building, training and evaluation
// of the multimodal building-damage classifier.

#include <CLI11.hpp>

#include <iostream>

#include "qsbd/cli/commands.hpp"

namespace {

using namespace qsbd;
using namespace qsbd::cli;

void print_error(std::string_view kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
}

void add_model_flags(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--modalities", m.modalities, "sar,ftp[,dsm][,gem]")->capture_default_str();
  cmd->add_option("--profile", m.profile, "compact | full")->capture_default_str();
  cmd->add_option("--seed", m.train.seed, "Training seed")->capture_default_str();
  cmd->add_option("--epochs", m.train.max_epochs, "Maximum epochs")->capture_default_str();
  cmd->add_option("--lr", m.train.adam.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--batch", m.train.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--patience", m.train.patience, "Early-stopping patience in epochs")->capture_default_str();
  cmd->add_option("--pos-weight", m.train.pos_weight, "Positive-class loss weight (default off)");
  cmd->add_option("--val-fraction", m.val_fraction, "Stratified validation share")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Building damage detection from SAR, footprints, DSM and exposure data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Log per-epoch progress");
  app.add_flag("-q,--quiet", quiet, "Log warnings and errors only");
  std::string config;
  app.add_option("--config", config, "JSON file whose keys override the flags (a run.json also works)");

  SynthGenOptions gen;
  auto* c_gen = app.add_subcommand("synth-gen", "Generate a synthetic multi-city scene campaign");
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_option("--cities", gen.cities, "Number of cities (uniform preset)")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Campaign seed")->capture_default_str();
  c_gen->add_option("--preset", gen.preset, "uniform | table")->capture_default_str();
  c_gen->add_option("--campaign", gen.campaign, "Regenerate from a campaign.json")->check(CLI::ExistingFile);
  c_gen->add_option("--buildings", gen.scene.building_count, "Buildings per city")->capture_default_str();
  c_gen->add_option("--damage-rate", gen.scene.damage_rate, "Damaged share per city")->capture_default_str();
  c_gen->add_option("--s-sar", gen.scene.s_sar, "SAR damage signal in [0,1]")->capture_default_str();
  c_gen->add_option("--s-dsm", gen.scene.s_dsm, "DSM damage signal in [0,1]")->capture_default_str();
  c_gen->add_option("--s-gem", gen.scene.s_gem, "Exposure damage signal in [0,1]")->capture_default_str();
  c_gen->add_option("--looks", gen.scene.looks, "Speckle looks")->capture_default_str();

  BuildOptions build;
  auto* c_build = app.add_subcommand("build-dataset", "Build the building-centred sample store");
  c_build->add_option("--scenes", build.scenes, "Directory of city subdirectories")->required();
  c_build->add_option("--out", build.out, "Output directory")->required();
  c_build->add_option("--patch", build.build.patch_size, "Patch size in SAR pixels")->capture_default_str();
  c_build->add_option("--ratio", build.build.sampling_ratio, "Intact samples per damaged")->capture_default_str();
  c_build->add_option("--seed", build.build.seed, "Negative-sampling seed")->capture_default_str();
  c_build->add_option("--overlap", build.build.overlap_ratio, "Labeling overlap ratio")->capture_default_str();
  c_build->add_flag("--sar-db", build.build.sar_db, "Convert SAR amplitudes to decibels");
  c_build->add_flag("--dsm-native{false}", build.build.dsm_on_sar_grid,
                    "Cut DSM patches in native DSM pixels instead of on the SAR patch grid");

  TrainOptions tr;
  auto* c_train = app.add_subcommand("train", "Train one model and write a checkpoint");
  c_train->add_option("--dataset", tr.dataset, "Sample store directory")->required();
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();
  add_model_flags(c_train, tr.model);

  EvaluateOptions ev;
  auto* c_eval = app.add_subcommand("evaluate", "Score a dataset with a checkpoint");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  c_eval->add_option("--dataset", ev.dataset, "Sample store directory")->required();
  c_eval->add_option("--out", ev.out, "Output directory")->required();

  ProtocolOptions cv, loco;
  auto* c_cv = app.add_subcommand("cross-validate", "Stratified k-fold cross-validation");
  c_cv->add_option("--dataset", cv.dataset, "Sample store directory")->required();
  c_cv->add_option("--out", cv.out, "Output directory")->required();
  c_cv->add_option("--k", cv.k, "Number of folds")->capture_default_str();
  c_cv->add_option("--split-seed", cv.split_seed, "Fold assignment seed")->capture_default_str();
  c_cv->add_option("--jobs", cv.jobs, "Folds trained concurrently")->capture_default_str();
  add_model_flags(c_cv, cv.model);

  auto* c_loco = app.add_subcommand("loco", "Leave-one-city-out evaluation");
  c_loco->add_option("--dataset", loco.dataset, "Sample store directory")->required();
  c_loco->add_option("--out", loco.out, "Output directory")->required();
  c_loco->add_option("--jobs", loco.jobs, "Cities trained concurrently")->capture_default_str();
  add_model_flags(c_loco, loco.model);

  PredictOptions pr;
  auto* c_pred = app.add_subcommand("predict", "Write per-building damage probabilities as GeoJSON");
  c_pred->add_option("--checkpoint", pr.checkpoint, "Checkpoint path")->required();
  c_pred->add_option("--scene", pr.scene, "City directory")->required();
  c_pred->add_option("--out", pr.out, "Output GeoJSON path")->required();
  c_pred->add_option("--threshold", pr.threshold, "Decision threshold (default: stored in checkpoint)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what(), 2);
    return 2;
  }

  if (quiet) log::sink().threshold = log::Level::kWarn;
  if (verbose) log::sink().threshold = log::Level::kDebug;

  auto with_config = [&](auto& opts) {
    if (!config.empty()) apply_config_file(opts, config);
  };
  try {
    if (*c_gen) {
      with_config(gen);
      cmd_synth_gen(gen);
    } else if (*c_build) {
      with_config(build);
      cmd_build_dataset(build);
    } else if (*c_train) {
      with_config(tr);
      cmd_train(tr);
    } else if (*c_eval) {
      with_config(ev);
      cmd_evaluate(ev);
    } else if (*c_cv) {
      with_config(cv);
      cmd_cross_validate(cv);
    } else if (*c_loco) {
      with_config(loco);
      cmd_loco(loco);
    } else if (*c_pred) {
      with_config(pr);
      cmd_predict(pr);
    }
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    print_error(to_string(e.kind()), e.what(), code);
    return code;
  } catch (const nlohmann::json::exception& e) {
    print_error("ParseError", e.what(), 1);
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    print_error("IoError", e.what(), 3);
    return 3;
  } catch (const std::exception& e) {
    print_error("RuntimeError", e.what(), 3);
    return 3;
  }
  return 0;
}
