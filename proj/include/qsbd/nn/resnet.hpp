#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsbd/nn/layers.hpp"

namespace qsbd::nn {

// ResNet encoder layout. full() is the ResNet-18 basic-block layout; compact() is the
// small profile used for fast experiments.
struct EncoderConfig {
  std::size_t in_channels = 1;
  std::size_t stem_channels = 64;
  std::vector<std::size_t> stage_blocks{2, 2, 2, 2};
  std::vector<std::size_t> stage_channels{64, 128, 256, 512};
  std::size_t embedding_dim = 512;
  NormKind norm = NormKind::kBatch;
  std::size_t norm_groups = 8;

  static EncoderConfig full() { return {}; }
  static EncoderConfig compact() { return {1, 16, {1, 1}, {16, 32}, 32, NormKind::kBatch, 8}; }

  std::size_t downsampling_stages() const { return stage_channels.empty() ? 0 : stage_channels.size() - 1; }

  void validate() const {
    if (stage_blocks.empty() || stage_blocks.size() != stage_channels.size()) {
      throw Error(ErrorKind::kInvalidArgument, "encoder needs matching, non-empty stage lists");
    }
    for (std::size_t i = 0; i < stage_blocks.size(); ++i) {
      if (stage_blocks[i] < 1) throw Error(ErrorKind::kInvalidArgument, "stage block count must be >= 1");
      if (i > 0 && stage_channels[i] <= stage_channels[i - 1]) {
        throw Error(ErrorKind::kInvalidArgument, "stage channels must be strictly increasing");
      }
    }
    if (in_channels == 0 || stem_channels == 0 || embedding_dim == 0) {
      throw Error(ErrorKind::kInvalidArgument, "encoder widths must be positive");
    }
  }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"family", "resnet"},
       {"in_channels", c.in_channels},
       {"stem_channels", c.stem_channels},
       {"stage_blocks", c.stage_blocks},
       {"stage_channels", c.stage_channels},
       {"embedding_dim", c.embedding_dim},
       {"norm", c.norm == NormKind::kBatch ? "batch" : "group"},
       {"norm_groups", c.norm_groups}};
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  if (j.value("family", "resnet") != "resnet") throw Error(ErrorKind::kConfigMismatch, "unknown encoder family");
  c.in_channels = j.at("in_channels").get<std::size_t>();
  c.stem_channels = j.at("stem_channels").get<std::size_t>();
  c.stage_blocks = j.at("stage_blocks").get<std::vector<std::size_t>>();
  c.stage_channels = j.at("stage_channels").get<std::vector<std::size_t>>();
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.norm = j.value("norm", "batch") == "group" ? NormKind::kGroup : NormKind::kBatch;
  c.norm_groups = j.value("norm_groups", std::size_t{8});
}

template <typename T>
class BasicBlock {
 public:
  BasicBlock(const std::string& name, std::size_t in, std::size_t out, std::size_t stride, NormKind norm,
             std::size_t groups)
      : conv1_(name + ".conv1", in, out, 3, stride),
        norm1_(norm, name + ".norm1", out, groups),
        conv2_(name + ".conv2", out, out, 3, 1),
        norm2_(norm, name + ".norm2", out, groups) {
    if (stride != 1 || in != out) {
      proj_conv_.emplace(name + ".proj.conv", in, out, 1, stride);
      proj_norm_.emplace(norm, name + ".proj.norm", out, groups);
    }
  }

  void init(Rng& rng) {
    conv1_.init(rng);
    norm1_.init(rng);
    conv2_.init(rng);
    norm2_.init(rng);
    if (proj_conv_) {
      proj_conv_->init(rng);
      proj_norm_->init(rng);
    }
  }

  Tensor<T> forward(const Tensor<T>& x, bool training) {
    Tensor<T> main = relu1_.forward(norm1_.forward(conv1_.forward(x), training));
    main = norm2_.forward(conv2_.forward(main), training);
    const Tensor<T> shortcut = proj_conv_ ? proj_norm_->forward(proj_conv_->forward(x), training) : x;
    for (std::size_t i = 0; i < main.size(); ++i) main[i] += shortcut[i];
    return relu_out_.forward(main);
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T> g = relu_out_.backward(gy);
    Tensor<T> gx = conv1_.backward(norm1_.backward(relu1_.backward(conv2_.backward(norm2_.backward(g)))));
    const Tensor<T> gs = proj_conv_ ? proj_conv_->backward(proj_norm_->backward(g)) : g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gs[i];
    return gx;
  }

  void collect(StateRefs<T>& refs) {
    conv1_.collect(refs);
    norm1_.collect(refs);
    conv2_.collect(refs);
    norm2_.collect(refs);
    if (proj_conv_) {
      proj_conv_->collect(refs);
      proj_norm_->collect(refs);
    }
  }

 private:
  Conv2d<T> conv1_;
  Norm2d<T> norm1_;
  Relu<T> relu1_;
  Conv2d<T> conv2_;
  Norm2d<T> norm2_;
  std::optional<Conv2d<T>> proj_conv_;
  std::optional<Norm2d<T>> proj_norm_;
  Relu<T> relu_out_;
};

// 3x3 stride-1 stem (no max-pool), residual stages, global average pooling and an
// optional linear projection when embedding_dim differs from the last stage width.
template <typename T>
class ResNetEncoder {
 public:
  ResNetEncoder(const std::string& name, const EncoderConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    stem_conv_ = Conv2d<T>(name + ".stem.conv", cfg.in_channels, cfg.stem_channels, 3, 1);
    stem_norm_ = Norm2d<T>(cfg.norm, name + ".stem.norm", cfg.stem_channels, cfg.norm_groups);
    std::size_t in = cfg.stem_channels;
    for (std::size_t s = 0; s < cfg.stage_blocks.size(); ++s) {
      for (std::size_t b = 0; b < cfg.stage_blocks[s]; ++b) {
        const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
        blocks_.emplace_back(name + ".stage" + std::to_string(s) + ".block" + std::to_string(b), in,
                             cfg.stage_channels[s], stride, cfg.norm, cfg.norm_groups);
        in = cfg.stage_channels[s];
      }
    }
    if (cfg.embedding_dim != in) projection_.emplace(name + ".embed", in, cfg.embedding_dim);
  }

  const EncoderConfig& config() const { return cfg_; }
  std::size_t embedding_dim() const { return cfg_.embedding_dim; }

  void init(Rng& rng) {
    stem_conv_.init(rng);
    stem_norm_.init(rng);
    for (auto& b : blocks_) b.init(rng);
    if (projection_) projection_->init(rng);
  }

  // [B, in_channels, H, W] -> [B, embedding_dim]
  Tensor<T> forward(const Tensor<T>& x, bool training) {
    require_rank(x.shape(), 4, "resnet_encode");
    const std::size_t min_side = std::size_t{1} << cfg_.downsampling_stages();
    if (x.dim(2) < min_side || x.dim(3) < min_side) {
      throw Error(ErrorKind::kShapeMismatch, "encoder input " + shape_string(x.shape()) + " smaller than " +
                                                 std::to_string(min_side) + " pixels");
    }
    Tensor<T> h = stem_relu_.forward(stem_norm_.forward(stem_conv_.forward(x), training));
    for (auto& b : blocks_) h = b.forward(h, training);
    h = pool_.forward(h);
    return projection_ ? projection_->forward(h) : h;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = projection_ ? projection_->backward(gy) : gy;
    g = pool_.backward(g);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = it->backward(g);
    return stem_conv_.backward(stem_norm_.backward(stem_relu_.backward(g)));
  }

  void collect(StateRefs<T>& refs) {
    stem_conv_.collect(refs);
    stem_norm_.collect(refs);
    for (auto& b : blocks_) b.collect(refs);
    if (projection_) projection_->collect(refs);
  }

 private:
  EncoderConfig cfg_;
  Conv2d<T> stem_conv_;
  Norm2d<T> stem_norm_;
  Relu<T> stem_relu_;
  std::vector<BasicBlock<T>> blocks_;
  GlobalAvgPool<T> pool_;
  std::optional<Linear<T>> projection_;
};

// Fully connected stack with ReLU after every layer.
template <typename T>
class Mlp {
 public:
  Mlp(const std::string& name, std::size_t in, const std::vector<std::size_t>& widths) {
    if (widths.empty()) throw Error(ErrorKind::kInvalidArgument, name + ": MLP needs at least one layer");
    std::size_t prev = in;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      layers_.emplace_back(name + ".fc" + std::to_string(i), prev, widths[i]);
      prev = widths[i];
    }
    relus_.resize(widths.size());
  }

  std::size_t out_features() const { return layers_.back().out_features(); }

  void init(Rng& rng) {
    for (auto& l : layers_) l.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) h = relus_[i].forward(layers_[i].forward(h));
    return h;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = gy;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i].backward(relus_[i].backward(g));
    return g;
  }

  void collect(StateRefs<T>& refs) {
    for (auto& l : layers_) l.collect(refs);
  }

  std::vector<Linear<T>>& layers() { return layers_; }

 private:
  std::vector<Linear<T>> layers_;
  std::vector<Relu<T>> relus_;
};

}  // namespace qsbd::nn
