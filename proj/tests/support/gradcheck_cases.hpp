#pragma once

// Finite-difference cases for every differentiable layer and the end-to-end
// compact fusion model. Each case builds a random instance from its seed.

#include "gradcheck.hpp"
#include "qsbd/fusion/model.hpp"
#include "qsbd/nn/resnet.hpp"

namespace qsbd::testing {

using nn::BatchNorm2d;
using nn::Conv2d;
using nn::Dropout;
using nn::EncoderConfig;
using nn::GlobalAvgPool;
using nn::GroupNorm2d;
using nn::Linear;
using nn::Mlp;
using nn::NormKind;
using nn::Relu;
using nn::StateRefs;
using nn::ResNetEncoder;
using nn::Tensor;

template <typename Layer>
inline std::vector<GradTarget> param_targets(Layer& layer) {
  nn::StateRefs<double> refs;
  layer.collect(refs);
  std::vector<GradTarget> out;
  for (auto* p : refs.params) out.push_back({p->name, &p->value, &p->grad});
  return out;
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); }

template <typename T>
fusion::FusionInput<T> random_fusion_input(Rng& rng, std::size_t batch, std::size_t patch, std::size_t g) {
  fusion::FusionInput<T> in;
  in.sar = nn::Tensor<T>({batch, 1, patch, patch});
  in.ftp = nn::Tensor<T>({batch, 1, patch, patch});
  in.dsm = nn::Tensor<T>({batch, 1, patch, patch});
  in.gem = nn::Tensor<T>({batch, g});
  for (auto* t : {&in.sar, &in.dsm, &in.gem}) {
    for (auto& v : t->values()) v = static_cast<T>(rng.normal());
  }
  for (auto& v : in.ftp.values()) v = static_cast<T>(rng.uniform() < 0.4 ? 1 : 0);
  return in;
}

inline GradCheckReport conv2d(int seed) {
  Rng rng(seed);
  const std::size_t k = rng.index(2) ? 3 : 1, stride = 1 + rng.index(2);
  Conv2d<double> conv("conv", pick(rng, 1, 3), pick(rng, 1, 3), k, stride, rng.index(2) == 1);
  conv.init(rng);
  if (conv.bias()) randomize(conv.bias()->value, rng);
  Tensor<double> x({pick(rng, 1, 2), conv.weight().value.dim(1), pick(rng, 3, 6), pick(rng, 3, 6)});
  randomize(x, rng);
  Tensor<double> gx;
  auto targets = param_targets(conv);
  targets.push_back({"input", &x, &gx});
  return finite_difference_check([&] { return conv.forward(x); },
                                [&](const Tensor<double>& g) { gx = conv.backward(g); }, targets, rng);
}

inline GradCheckReport batch_norm(int seed) {
  Rng rng(seed);
  const bool training = seed % 4 != 0;
  BatchNorm2d<double> bn("bn", pick(rng, 1, 3));
  randomize(bn.gamma().value, rng, 0.5, 1.5);
  randomize(bn.beta().value, rng);
  randomize(bn.running_mean().value, rng);
  randomize(bn.running_var().value, rng, 0.5, 2.0);
  Tensor<double> x({pick(rng, 2, 3), bn.gamma().value.size(), pick(rng, 2, 4), pick(rng, 2, 4)});
  randomize(x, rng, -2, 2);
  Tensor<double> gx;
  auto targets = param_targets(bn);
  targets.push_back({"input", &x, &gx});
  return finite_difference_check([&] { return bn.forward(x, training); },
                                [&](const Tensor<double>& g) { gx = bn.backward(g); }, targets, rng);
}

inline GradCheckReport group_norm(int seed) {
  Rng rng(seed);
  const std::size_t groups = pick(rng, 1, 2);
  GroupNorm2d<double> gn("gn", groups * pick(rng, 1, 2), groups);
  StateRefs<double> refs;
  gn.collect(refs);
  randomize(refs.params[0]->value, rng, 0.5, 1.5);
  randomize(refs.params[1]->value, rng);
  Tensor<double> x({pick(rng, 1, 2), refs.params[0]->value.size(), pick(rng, 2, 4), pick(rng, 2, 4)});
  randomize(x, rng, -2, 2);
  Tensor<double> gx;
  auto targets = param_targets(gn);
  targets.push_back({"input", &x, &gx});
  return finite_difference_check([&] { return gn.forward(x, true); },
                                [&](const Tensor<double>& g) { gx = gn.backward(g); }, targets, rng);
}

inline GradCheckReport relu_pool_linear_dropout(int seed) {
  Rng rng(seed);
  // relu -> pool -> linear -> dropout with a replayed mask.
  Relu<double> relu;
  GlobalAvgPool<double> pool;
  const std::size_t c = pick(rng, 1, 4);
  Linear<double> fc("fc", c, pick(rng, 1, 4));
  fc.init(rng);
  randomize(fc.bias().value, rng);
  Dropout<double> drop(0.3);
  const std::uint64_t mask_seed = rng.engine()();
  Tensor<double> x({pick(rng, 1, 3), c, pick(rng, 1, 3), pick(rng, 1, 3)});
  randomize(x, rng);
  Tensor<double> gx;
  auto targets = param_targets(fc);
  targets.push_back({"input", &x, &gx});
  auto fwd = [&] {
    Rng mask_rng(mask_seed);
    return drop.forward(fc.forward(pool.forward(relu.forward(x))), true, mask_rng);
  };
  auto bwd = [&](const Tensor<double>& g) {
    gx = relu.backward(pool.backward(fc.backward(drop.backward(g))));
  };
  return finite_difference_check(fwd, bwd, targets, rng);
}

inline GradCheckReport residual_encoder(int seed) {
  Rng rng(seed);
  EncoderConfig cfg{1, 2, {1, 1}, {2, 3}, seed % 2 ? 3u : 4u, seed % 3 == 0 ? NormKind::kGroup : NormKind::kBatch, 1};
  ResNetEncoder<double> enc("enc", cfg);
  enc.init(rng);
  Tensor<double> x({2, 1, 4, 4});
  randomize(x, rng);
  Tensor<double> gx;
  auto targets = param_targets(enc);
  targets.push_back({"input", &x, &gx});
  return finite_difference_check([&] { return enc.forward(x, true); },
                                [&](const Tensor<double>& g) { gx = enc.backward(g); }, targets, rng, 12);
}

inline GradCheckReport mlp(int seed) {
  Rng rng(seed);
  Mlp<double> mlp("mlp", pick(rng, 1, 5), {pick(rng, 2, 6), pick(rng, 2, 6)});
  mlp.init(rng);
  // Non-zero biases keep pre-activations off the ReLU kink at exactly 0.
  for (auto& l : mlp.layers()) randomize(l.bias().value, rng, 0.05, 0.5);
  Tensor<double> x({pick(rng, 1, 4), mlp.layers()[0].in_features()});
  randomize(x, rng);
  Tensor<double> gx;
  auto targets = param_targets(mlp);
  targets.push_back({"input", &x, &gx});
  return finite_difference_check([&] { return mlp.forward(x); },
                                [&](const Tensor<double>& g) { gx = mlp.backward(g); }, targets, rng);
}

inline GradCheckReport end_to_end_fusion(std::uint64_t seed) {
  Rng rng(1000 + seed);
  fusion::FusionConfig cfg = fusion::FusionConfig::make("compact", fusion::ModalitySet::all(), 3);
  cfg.gem_widths = {5, 4};
  cfg.head_hidden = 6;
  fusion::FusionModel<double> model(cfg);
  model.init(rng);
  auto st = model.state();
  for (auto* p : st.params) {
    if (p->name.find(".bias") != std::string::npos || p->name.find(".beta") != std::string::npos) {
      randomize(p->value, rng, 0.05, 0.3);
    }
  }
  auto in = random_fusion_input<double>(rng, 3, 8, 3);
  const std::uint64_t drop_seed = rng.index(1u << 30);
  auto forward = [&] {
    Rng drop(drop_seed);
    return model.forward(in, true, drop).logit;
  };
  auto backward = [&](const nn::Tensor<double>& g) {
    model.zero_grad();
    model.backward(g);
  };
  std::vector<GradTarget> targets;
  for (auto* p : st.params) targets.push_back({p->name, &p->value, &p->grad});
  return finite_difference_check(forward, backward, targets, rng, 4);
}

struct LayerCase {
  const char* name;
  GradCheckReport (*run)(int);
};

inline constexpr LayerCase kLayerCases[] = {{"conv2d", conv2d},
                                            {"batch_norm", batch_norm},
                                            {"group_norm", group_norm},
                                            {"relu_pool_linear_dropout", relu_pool_linear_dropout},
                                            {"residual_encoder", residual_encoder},
                                            {"mlp", mlp}};

}  // namespace qsbd::testing
