#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck_cases.hpp"
#include "qsbd/dataset/patch.hpp"
#include "qsbd/fusion/model.hpp"
#include "qsbd/nn/adam.hpp"
#include "qsbd/training/loss.hpp"
#include "test_util.hpp"

namespace qsbd::fusion {
namespace {

using testing::random_fusion_input;

}  // namespace

TEST(Fusion, FullProfileEmbeddingWidths) {
  const auto cfg = FusionConfig::make("full", ModalitySet::all(), 5);
  EXPECT_EQ(cfg.fused_dim(), 1600u);
  FusionModel<float> model(cfg);
  Rng rng(31);
  model.init(rng);
  const auto in = random_fusion_input<float>(rng, 2, 32, 5);
  const auto acts = model.forward(in, false, rng);
  EXPECT_EQ(acts.f_sar->dim(1), 512u);
  EXPECT_EQ(acts.f_ftp->dim(1), 512u);
  EXPECT_EQ(acts.f_dsm->dim(1), 512u);
  EXPECT_EQ(acts.f_gem->dim(1), 64u);
  EXPECT_EQ(acts.fused.shape(), (nn::Shape{2, 1600}));
  for (float p : acts.prob.values()) {
    EXPECT_GT(p, 0.0f);
    EXPECT_LT(p, 1.0f);
  }
}

TEST(Fusion, ModalitySubsetAndMissingInput) {
  FusionModel<float> model(FusionConfig::make("compact", {}, 4));
  Rng rng(32);
  model.init(rng);
  auto in = random_fusion_input<float>(rng, 3, 16, 4);
  const auto acts = model.forward(in, false, rng);
  EXPECT_TRUE(acts.f_sar && acts.f_ftp);
  EXPECT_FALSE(acts.f_dsm || acts.f_gem);
  EXPECT_EQ(acts.fused.dim(1), 64u);

  FusionModel<float> with_dsm(FusionConfig::make("compact", {true, false}, 4));
  with_dsm.init(rng);
  in.dsm = nn::Tensor<float>();
  try {
    with_dsm.forward(in, false, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingModality);
  }
  EXPECT_THROW(parse_modalities("sar,dsm"), Error);
  EXPECT_EQ(parse_modalities("gem, sar,ftp").str(), "sar,ftp,gem");
}

TEST(Fusion, ZeroGemInputGivesZeroEmbedding) {
  FusionModel<float> model(FusionConfig::make("compact", {false, true}, 6));
  Rng rng(33);
  model.init(rng);
  auto in = random_fusion_input<float>(rng, 2, 16, 6);
  in.gem.fill(0.0f);
  const auto acts = model.forward(in, false, rng);
  for (float v : acts.f_gem->values()) EXPECT_EQ(v, 0.0f);
}

TEST(Fusion, ZeroHeadGivesOneHalf) {
  FusionModel<float> model(FusionConfig::make("compact", ModalitySet::all(), 3));
  Rng rng(34);
  model.init(rng);
  model.head_fc1().weight().value.fill(0.0f);
  model.head_fc1().bias().value.fill(0.0f);
  const auto acts = model.forward(random_fusion_input<float>(rng, 4, 16, 3), true, rng);
  for (float p : acts.prob.values()) EXPECT_EQ(p, 0.5f);
}

TEST(Fusion, EvalDeterministicAndBatchEquivariant) {
  FusionModel<float> model(FusionConfig::make("compact", ModalitySet::all(), 3));
  Rng rng(35);
  model.init(rng);
  const auto in = random_fusion_input<float>(rng, 4, 16, 3);
  Rng r1(1), r2(2);
  const auto a = model.forward(in, false, r1);
  const auto b = model.forward(in, false, r2);
  EXPECT_EQ(a.prob, b.prob);
  EXPECT_EQ(a.fused, b.fused);

  // Swap samples 0 and 2 in every modality.
  auto swapped = in;
  auto swap_rows = [](nn::Tensor<float>& t) {
    const std::size_t row = t.size() / t.dim(0);
    std::swap_ranges(t.data(), t.data() + row, t.data() + 2 * row);
  };
  for (auto* t : {&swapped.sar, &swapped.ftp, &swapped.dsm, &swapped.gem}) swap_rows(*t);
  const auto c = model.forward(swapped, false, r1);
  auto expect = a.fused;
  swap_rows(expect);
  EXPECT_EQ(c.fused, expect);
}

TEST(Fusion, DisablingModalityLeavesOtherPathsUnchanged) {
  FusionModel<float> all(FusionConfig::make("compact", ModalitySet::all(), 3));
  FusionModel<float> two(FusionConfig::make("compact", {}, 3));
  Rng rng(36);
  all.init(rng);
  two.init(rng);
  // Copy the shared encoder parameters by name.
  auto all_state = all.state();
  auto two_state = two.state();
  std::size_t copied = 0;
  for (auto* p : two_state.params) {
    for (auto* q : all_state.params) {
      if (p->name == q->name && p->value.shape() == q->value.shape() && p->name.rfind("head", 0) != 0) {
        p->value = q->value;
        ++copied;
      }
    }
  }
  for (auto* b : two_state.buffers) {
    for (auto* q : all_state.buffers) {
      if (b->name == q->name) b->value = q->value;
    }
  }
  EXPECT_GT(copied, 0u);
  const auto in = random_fusion_input<float>(rng, 3, 16, 3);
  const auto a = all.forward(in, false, rng);
  const auto b = two.forward(in, false, rng);
  EXPECT_EQ(*a.f_sar, *b.f_sar);
  EXPECT_EQ(*a.f_ftp, *b.f_ftp);
  EXPECT_EQ(a.fused.dim(1) - b.fused.dim(1), 32u + 64u);

  const auto ckpt = two.to_checkpoint({});
  for (const auto& t : ckpt.tensors) {
    EXPECT_NE(t.name.rfind("dsm.", 0), 0u) << t.name;
    EXPECT_NE(t.name.rfind("gem.", 0), 0u) << t.name;
  }
}

TEST(Fusion, CheckpointRoundTripAndMismatch) {
  FusionModel<float> model(FusionConfig::make("compact", ModalitySet::all(), 3));
  Rng rng(37);
  model.init(rng);
  const auto in = random_fusion_input<float>(rng, 2, 16, 3);
  const auto path = testing::scratch_dir("fusion_ckpt") / "m.qsbd";
  nn::save_checkpoint(model.to_checkpoint({{"epoch", 3}}), path);
  const auto ckpt = nn::load_checkpoint(path);
  FusionModel<float> back(ckpt.config.get<FusionConfig>());
  back.load(ckpt);
  EXPECT_EQ(back.predict(in), model.predict(in));

  FusionModel<float> full(FusionConfig::make("full", ModalitySet::all(), 3));
  FusionModel<float> fewer(FusionConfig::make("compact", {true, false}, 3));
  for (auto* m : {&full, &fewer}) {
    try {
      m->load(ckpt);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfigMismatch);
    }
  }
}

// End-to-end finite differences through encoders, MLP, head and dropout (mask
// replayed from a fixed seed) in 64-bit mode, compact layout on small patches.
TEST(GradCheck, EndToEndCompactFusion) {
  double worst = 0.0;
  std::size_t retries = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto rep = testing::end_to_end_fusion(seed);
    worst = std::max(worst, rep.worst_rel_error);
    retries += rep.kink_retries;
    ASSERT_LT(rep.worst_rel_error, 1e-4) << "seed " << seed << " target " << rep.worst_target;
  }
  RecordProperty("worst_rel_error", std::to_string(worst));
  RecordProperty("kink_retries", std::to_string(retries));
}

TEST(Fusion, FrozenBatchLossHalvesIn50Steps) {
  FusionModel<float> model(FusionConfig::make("compact", ModalitySet::all(), 4));
  Rng rng(38);
  model.init(rng);
  auto in = random_fusion_input<float>(rng, 32, 16, 4);
  std::vector<int> y(32);
  for (std::size_t i = 0; i < 32; ++i) y[i] = i % 2;
  auto eval_loss = [&] {
    const auto p = model.predict(in);
    return train::bce_loss(y, std::vector<double>(p.begin(), p.end()));
  };
  const double initial = eval_loss();
  auto st = model.state();
  nn::AdamState<float> adam;
  nn::AdamConfig acfg;
  acfg.lr = 1e-3;
  for (int step = 0; step < 50; ++step) {
    model.zero_grad();
    const auto acts = model.forward(in, true, rng);
    model.backward(nn::Tensor<float>({32, 1}, train::bce_logit_grad<float>(y, acts.logit.values())));
    nn::adam_step(st.params, adam, acfg);
  }
  EXPECT_LT(eval_loss(), 0.5 * initial);
}

// Raster cells outside a building's patch window cannot reach its inputs.
TEST(Fusion, OutputIgnoresRasterOutsidePatch) {
  Rng rng(39);
  const geo::GeoTransform t{0, 400, 2.5, 2.5};
  geo::Raster r(160, 160, t);
  for (auto& v : r.values) v = static_cast<float>(rng.uniform());
  const geo::Point c{200, 200};
  long col0, row0;
  data::patch_origin(t, c, 16, col0, row0);
  geo::Raster r2 = r;
  for (int row = 0; row < r.height; ++row) {
    for (int col = 0; col < r.width; ++col) {
      if (row < row0 || row >= row0 + 16 || col < col0 || col >= col0 + 16) r2.at(col, row) = 99.0f;
    }
  }
  FusionModel<float> model(FusionConfig::make("compact", {}, 1));
  model.init(rng);
  auto make = [&](const geo::Raster& src) {
    FusionInput<float> in;
    in.sar = nn::Tensor<float>({1, 1, 16, 16}, data::extract_patch(src, c, 16).values);
    in.ftp = nn::Tensor<float>({1, 1, 16, 16}, 1.0f);
    return in;
  };
  EXPECT_EQ(model.predict(make(r)), model.predict(make(r2)));
}

}  // namespace qsbd::fusion
