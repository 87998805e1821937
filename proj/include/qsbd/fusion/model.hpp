#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsbd/fusion/config.hpp"
#include "qsbd/nn/checkpoint.hpp"
#include "qsbd/nn/resnet.hpp"

namespace qsbd::fusion {

// One batch of network inputs. Spatial tensors are [B, 1, P, P]; gem is [B, G].
template <typename T>
struct FusionInput {
  nn::Tensor<T> sar;
  nn::Tensor<T> ftp;
  nn::Tensor<T> dsm;
  nn::Tensor<T> gem;

  std::size_t batch() const { return sar.rank() ? sar.dim(0) : 0; }
};

template <typename T>
struct FusionActivations {
  std::optional<nn::Tensor<T>> f_sar, f_ftp, f_dsm, f_gem;
  nn::Tensor<T> fused;  // [B, fused_dim]
  nn::Tensor<T> logit;  // [B, 1]
  nn::Tensor<T> prob;   // [B, 1]
};

// Late-fusion classifier: one encoder per spatial modality, an MLP for the exposure
// vector, concatenation in SAR, FTP, DSM, GEM order, then FC-ReLU-dropout-FC-sigmoid.
template <typename T>
class FusionModel {
 public:
  explicit FusionModel(const FusionConfig& cfg)
      : cfg_(cfg),
        sar_("sar", cfg.sar_encoder),
        ftp_("ftp", cfg.ftp_encoder),
        head_fc0_("head.fc0", cfg.fused_dim(), cfg.head_hidden, nn::LinearInit::kHe),
        head_drop_(cfg.dropout),
        head_fc1_("head.fc1", cfg.head_hidden, 1, nn::LinearInit::kGlorot) {
    cfg.validate();
    if (cfg.modalities.dsm) dsm_.emplace("dsm", cfg.dsm_encoder);
    if (cfg.modalities.gem) gem_.emplace("gem", cfg.gem_dim, cfg.gem_widths);
  }

  const FusionConfig& config() const { return cfg_; }

  void init(Rng& rng) {
    sar_.init(rng);
    ftp_.init(rng);
    if (dsm_) dsm_->init(rng);
    if (gem_) gem_->init(rng);
    head_fc0_.init(rng);
    head_fc1_.init(rng);
  }

  FusionActivations<T> encode(const FusionInput<T>& in, bool training) {
    const std::size_t batch = in.batch();
    auto check = [&](const nn::Tensor<T>& t, Modality m, std::size_t rank) {
      if (t.empty()) throw Error(ErrorKind::kMissingModality, std::string("input lacks ") + modality_name(m));
      nn::require_rank(t.shape(), rank, modality_name(m));
      if (t.dim(0) != batch) throw Error(ErrorKind::kShapeMismatch, std::string(modality_name(m)) + ": batch size");
    };
    FusionActivations<T> acts;
    check(in.sar, Modality::kSar, 4);
    check(in.ftp, Modality::kFtp, 4);
    acts.f_sar = sar_.forward(in.sar, training);
    acts.f_ftp = ftp_.forward(in.ftp, training);
    if (dsm_) {
      check(in.dsm, Modality::kDsm, 4);
      acts.f_dsm = dsm_->forward(in.dsm, training);
    }
    if (gem_) {
      check(in.gem, Modality::kGem, 2);
      acts.f_gem = gem_->forward(in.gem);
    }
    return acts;
  }

  // f_LF = [f_SAR, f_FTP, f_DSM, f_GEM] over the enabled subset.
  static nn::Tensor<T> fuse(const FusionActivations<T>& acts) {
    std::vector<const nn::Tensor<T>*> parts;
    for (const auto* p : {&acts.f_sar, &acts.f_ftp, &acts.f_dsm, &acts.f_gem}) {
      if (*p) parts.push_back(&**p);
    }
    if (parts.size() < 2) throw Error(ErrorKind::kMissingModality, "fusion needs at least two embeddings");
    const std::size_t batch = parts[0]->dim(0);
    std::size_t width = 0;
    for (const auto* p : parts) width += p->dim(1);
    nn::Tensor<T> out({batch, width});
    for (std::size_t b = 0; b < batch; ++b) {
      T* dst = out.data() + b * width;
      for (const auto* p : parts) {
        const std::size_t d = p->dim(1);
        std::copy_n(p->data() + b * d, d, dst);
        dst += d;
      }
    }
    return out;
  }

  // Head logits [B, 1]; dropout draws from rng only in training mode.
  nn::Tensor<T> classify_logit(const nn::Tensor<T>& fused, bool training, Rng& rng) {
    nn::Tensor<T> h = head_relu_.forward(head_fc0_.forward(fused));
    h = head_drop_.forward(h, training, rng);
    return head_fc1_.forward(h);
  }

  FusionActivations<T> forward(const FusionInput<T>& in, bool training, Rng& rng) {
    FusionActivations<T> acts = encode(in, training);
    acts.fused = fuse(acts);
    acts.logit = classify_logit(acts.fused, training, rng);
    acts.prob = nn::Tensor<T>(acts.logit.shape());
    for (std::size_t i = 0; i < acts.logit.size(); ++i) acts.prob[i] = nn::sigmoid(acts.logit[i]);
    return acts;
  }

  // Eval-mode probabilities without touching any random stream.
  std::vector<T> predict(const FusionInput<T>& in) {
    Rng unused(0);
    auto acts = forward(in, false, unused);
    return std::vector<T>(acts.prob.values().begin(), acts.prob.values().end());
  }

  // Accumulates parameter gradients from d(loss)/d(logit), shape [B, 1].
  void backward(const nn::Tensor<T>& grad_logit) {
    nn::Tensor<T> g = head_fc1_.backward(grad_logit);
    g = head_fc0_.backward(head_relu_.backward(head_drop_.backward(g)));
    const std::size_t batch = g.dim(0), width = g.dim(1);
    std::size_t offset = 0;
    auto slice = [&](std::size_t d) {
      nn::Tensor<T> part({batch, d});
      for (std::size_t b = 0; b < batch; ++b) std::copy_n(g.data() + b * width + offset, d, part.data() + b * d);
      offset += d;
      return part;
    };
    sar_.backward(slice(sar_.embedding_dim()));
    ftp_.backward(slice(ftp_.embedding_dim()));
    if (dsm_) dsm_->backward(slice(dsm_->embedding_dim()));
    if (gem_) gem_->backward(slice(gem_->out_features()));
  }

  nn::StateRefs<T> state() {
    nn::StateRefs<T> refs;
    sar_.collect(refs);
    ftp_.collect(refs);
    if (dsm_) dsm_->collect(refs);
    if (gem_) gem_->collect(refs);
    head_fc0_.collect(refs);
    head_fc1_.collect(refs);
    return refs;
  }

  void zero_grad() {
    for (auto* p : state().params) p->zero_grad();
  }

  nn::Checkpoint to_checkpoint(nlohmann::json metadata) {
    nn::Checkpoint ckpt;
    ckpt.config = cfg_;
    ckpt.metadata = std::move(metadata);
    ckpt.tensors = nn::export_tensors(state());
    return ckpt;
  }

  // Loads parameters; the stored architecture must equal this model's.
  void load(const nn::Checkpoint& ckpt) {
    FusionConfig stored;
    try {
      stored = ckpt.config.get<FusionConfig>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kConfigMismatch, std::string("checkpoint config unreadable: ") + e.what());
    }
    if (!(stored == cfg_)) {
      throw Error(ErrorKind::kConfigMismatch, "checkpoint architecture " + nlohmann::json(stored).dump() +
                                                  " differs from model " + nlohmann::json(cfg_).dump());
    }
    auto refs = state();
    nn::import_tensors(refs, ckpt.tensors);
  }

  nn::Linear<T>& head_fc0() { return head_fc0_; }
  nn::Linear<T>& head_fc1() { return head_fc1_; }
  std::optional<nn::Mlp<T>>& gem_mlp() { return gem_; }

 private:
  FusionConfig cfg_;
  nn::ResNetEncoder<T> sar_;
  nn::ResNetEncoder<T> ftp_;
  std::optional<nn::ResNetEncoder<T>> dsm_;
  std::optional<nn::Mlp<T>> gem_;
  nn::Linear<T> head_fc0_;
  nn::Relu<T> head_relu_;
  nn::Dropout<T> head_drop_;
  nn::Linear<T> head_fc1_;
};

}  // namespace qsbd::fusion
