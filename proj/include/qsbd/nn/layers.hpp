#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qsbd/core/rng.hpp"
#include "qsbd/nn/tensor.hpp"

namespace qsbd::nn {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using ConstArrayMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

template <typename T>
void fill_uniform(Tensor<T>& t, Rng& rng, double bound) {
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
inline T sigmoid(T z) {
  // Split on sign so exp never overflows.
  if (z >= T{0}) {
    return T{1} / (T{1} + std::exp(-z));
  }
  const T e = std::exp(z);
  return e / (T{1} + e);
}

// 2-D convolution with square kernels, zero padding kernel/2, via im2col + GEMM.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, bool with_bias = false)
      : in_c_(in_channels),
        out_c_(out_channels),
        k_(kernel),
        stride_(stride),
        pad_(kernel / 2),
        weight_(name + ".weight", {out_channels, in_channels, kernel, kernel}) {
    if (kernel != 1 && kernel != 3) throw Error(ErrorKind::kInvalidArgument, "conv kernel must be 1 or 3");
    if (stride != 1 && stride != 2) throw Error(ErrorKind::kInvalidArgument, "conv stride must be 1 or 2");
    if (with_bias) bias_.emplace(name + ".bias", Shape{out_channels});
  }

  // He-uniform weights, zero bias.
  void init(Rng& rng) {
    fill_uniform(weight_.value, rng, std::sqrt(6.0 / static_cast<double>(in_c_ * k_ * k_)));
    if (bias_) bias_->value.fill(T{0});
  }

  std::size_t out_size(std::size_t in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  Tensor<T> forward(const Tensor<T>& x) {
    require_rank(x.shape(), 4, "conv2d");
    if (x.dim(1) != in_c_) {
      throw Error(ErrorKind::kShapeMismatch, weight_.name + ": input channels " + std::to_string(x.dim(1)) +
                                                 " != " + std::to_string(in_c_));
    }
    const std::size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t ho = out_size(h), wo = out_size(w);
    const std::size_t ck = in_c_ * k_ * k_, hw = ho * wo;
    in_shape_ = x.shape();
    // Lowered columns are kept for the backward pass when they fit the budget.
    cached_ = !(k_ == 1 && stride_ == 1) && batch * ck * hw <= kColumnCacheLimit;
    if (cached_) {
      input_ = Tensor<T>();
      cols_.resize(batch * ck * hw);
    } else {
      input_ = x;
      cols_.resize(ck * hw);
    }
    Tensor<T> y({batch, out_c_, ho, wo});
    ConstMatMap<T> wmat(weight_.value.data(), out_c_, ck);
    for (std::size_t b = 0; b < batch; ++b) {
      const T* cols = lower(x.data() + b * in_c_ * h * w, h, w, cached_ ? cols_.data() + b * ck * hw : cols_.data());
      MatMap<T> out(y.data() + b * out_c_ * hw, out_c_, hw);
      out.noalias() = wmat * ConstMatMap<T>(cols, ck, hw);
      if (bias_) {
        for (std::size_t o = 0; o < out_c_; ++o) out.row(o).array() += bias_->value[o];
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (in_shape_.size() != 4) throw Error(ErrorKind::kShapeMismatch, weight_.name + ": backward before forward");
    const std::size_t batch = in_shape_[0], h = in_shape_[2], w = in_shape_[3];
    const std::size_t ho = out_size(h), wo = out_size(w);
    const std::size_t ck = in_c_ * k_ * k_, hw = ho * wo;
    if (gy.shape() != Shape{batch, out_c_, ho, wo}) {
      throw Error(ErrorKind::kShapeMismatch, weight_.name + ": gradient shape " + shape_string(gy.shape()));
    }
    Tensor<T> gx(in_shape_);
    dcols_.resize(ck * hw);
    ConstMatMap<T> wmat(weight_.value.data(), out_c_, ck);
    MatMap<T> dw(weight_.grad.data(), out_c_, ck);
    for (std::size_t b = 0; b < batch; ++b) {
      ConstMatMap<T> g(gy.data() + b * out_c_ * hw, out_c_, hw);
      const T* cols = cached_ ? cols_.data() + b * ck * hw
                              : lower(input_.data() + b * in_c_ * h * w, h, w, cols_.data());
      dw.noalias() += g * ConstMatMap<T>(cols, ck, hw).transpose();
      if (bias_) {
        for (std::size_t o = 0; o < out_c_; ++o) bias_->grad[o] += g.row(o).sum();
      }
      T* gxb = gx.data() + b * in_c_ * h * w;
      if (k_ == 1 && stride_ == 1) {
        MatMap<T>(gxb, ck, hw).noalias() = wmat.transpose() * g;
      } else {
        MatMap<T>(dcols_.data(), ck, hw).noalias() = wmat.transpose() * g;
        raise(dcols_.data(), h, w, gxb);
      }
    }
    return gx;
  }

  void collect(StateRefs<T>& refs) {
    refs.params.push_back(&weight_);
    if (bias_) refs.params.push_back(&*bias_);
  }

  Parameter<T>& weight() { return weight_; }
  std::optional<Parameter<T>>& bias() { return bias_; }

 private:
  // Output columns [lo, hi) whose input column ow*stride + offset falls inside [0, w).
  void valid_range(long offset, std::size_t w, std::size_t wo, std::size_t& lo, std::size_t& hi) const {
    const long s = static_cast<long>(stride_);
    long first = offset >= 0 ? 0 : (-offset + s - 1) / s;
    long last = (static_cast<long>(w) - 1 - offset) / s + 1;  // exclusive
    if (static_cast<long>(w) - 1 - offset < 0) last = 0;
    lo = static_cast<std::size_t>(std::clamp<long>(first, 0, static_cast<long>(wo)));
    hi = static_cast<std::size_t>(std::clamp<long>(last, static_cast<long>(lo), static_cast<long>(wo)));
  }

  // im2col; 1x1 stride-1 convolutions read the input in place.
  const T* lower(const T* x, std::size_t h, std::size_t w, T* dst) const {
    if (k_ == 1 && stride_ == 1) return x;
    const std::size_t ho = out_size(h), wo = out_size(w);
    T* out = dst;
    for (std::size_t c = 0; c < in_c_; ++c) {
      const T* plane = x + c * h * w;
      for (std::size_t ki = 0; ki < k_; ++ki) {
        for (std::size_t kj = 0; kj < k_; ++kj) {
          const long col_offset = static_cast<long>(kj) - static_cast<long>(pad_);
          std::size_t lo, hi;
          valid_range(col_offset, w, wo, lo, hi);
          for (std::size_t oh = 0; oh < ho; ++oh, out += wo) {
            const long ih = static_cast<long>(oh * stride_ + ki) - static_cast<long>(pad_);
            if (ih < 0 || ih >= static_cast<long>(h)) {
              std::fill(out, out + wo, T{0});
              continue;
            }
            const T* src = plane + static_cast<std::size_t>(ih) * w + col_offset;
            std::fill(out, out + lo, T{0});
            if (stride_ == 1) {
              std::copy(src + lo, src + hi, out + lo);
            } else {
              for (std::size_t ow = lo; ow < hi; ++ow) out[ow] = src[ow * stride_];
            }
            std::fill(out + hi, out + wo, T{0});
          }
        }
      }
    }
    return dst;
  }

  // col2im, accumulating into gx.
  void raise(const T* cols, std::size_t h, std::size_t w, T* gx) const {
    if (k_ == 1 && stride_ == 1) {
      for (std::size_t i = 0; i < in_c_ * h * w; ++i) gx[i] += cols[i];
      return;
    }
    const std::size_t ho = out_size(h), wo = out_size(w);
    const T* in = cols;
    for (std::size_t c = 0; c < in_c_; ++c) {
      T* plane = gx + c * h * w;
      for (std::size_t ki = 0; ki < k_; ++ki) {
        for (std::size_t kj = 0; kj < k_; ++kj) {
          const long col_offset = static_cast<long>(kj) - static_cast<long>(pad_);
          std::size_t lo, hi;
          valid_range(col_offset, w, wo, lo, hi);
          for (std::size_t oh = 0; oh < ho; ++oh, in += wo) {
            const long ih = static_cast<long>(oh * stride_ + ki) - static_cast<long>(pad_);
            if (ih < 0 || ih >= static_cast<long>(h)) continue;
            T* dst = plane + static_cast<std::size_t>(ih) * w + col_offset;
            if (stride_ == 1) {
              for (std::size_t ow = lo; ow < hi; ++ow) dst[ow] += in[ow];
            } else {
              for (std::size_t ow = lo; ow < hi; ++ow) dst[ow * stride_] += in[ow];
            }
          }
        }
      }
    }
  }

  static constexpr std::size_t kColumnCacheLimit = std::size_t{1} << 25;

  std::size_t in_c_ = 0, out_c_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
  Parameter<T> weight_;
  std::optional<Parameter<T>> bias_;
  Shape in_shape_;
  bool cached_ = false;
  Tensor<T> input_;
  AlignedVector<T> cols_;
  AlignedVector<T> dcols_;
};

// Batch normalization over (batch, height, width) per channel.
template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, std::size_t channels, double momentum = 0.1, double eps = 1e-5)
      : channels_(channels),
        momentum_(momentum),
        eps_(eps),
        gamma_(name + ".gamma", {channels}),
        beta_(name + ".beta", {channels}),
        running_mean_{name + ".running_mean", Tensor<T>({channels}, T{0})},
        running_var_{name + ".running_var", Tensor<T>({channels}, T{1})} {
    gamma_.value.fill(T{1});
  }

  void init(Rng&) {
    gamma_.value.fill(T{1});
    beta_.value.fill(T{0});
    running_mean_.value.fill(T{0});
    running_var_.value.fill(T{1});
  }

  Tensor<T> forward(const Tensor<T>& x, bool training) {
    require_rank(x.shape(), 4, "batchnorm");
    if (x.dim(1) != channels_) throw Error(ErrorKind::kShapeMismatch, gamma_.name + ": channel count");
    const std::size_t batch = x.dim(0), plane = x.dim(2) * x.dim(3);
    const std::size_t count = batch * plane;
    training_ = training;
    xhat_ = Tensor<T>(x.shape());
    inv_std_.assign(channels_, T{0});
    Tensor<T> y(x.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
      T mean, inv_std;
      if (training) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          sum += static_cast<double>(ConstArrayMap<T>(x.data() + (b * channels_ + c) * plane, plane).sum());
        }
        const double m = sum / static_cast<double>(count);
        for (std::size_t b = 0; b < batch; ++b) {
          const auto p = ConstArrayMap<T>(x.data() + (b * channels_ + c) * plane, plane);
          sq += static_cast<double>((p - static_cast<T>(m)).square().sum());
        }
        const double var = sq / static_cast<double>(count);
        mean = static_cast<T>(m);
        inv_std = static_cast<T>(1.0 / std::sqrt(var + eps_));
        const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
        running_mean_.value[c] = static_cast<T>((1.0 - momentum_) * running_mean_.value[c] + momentum_ * m);
        running_var_.value[c] = static_cast<T>((1.0 - momentum_) * running_var_.value[c] + momentum_ * unbiased);
      } else {
        mean = running_mean_.value[c];
        inv_std = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var_.value[c]) + eps_));
      }
      inv_std_[c] = inv_std;
      const T g = gamma_.value[c], bt = beta_.value[c];
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const T xh = (x[off + i] - mean) * inv_std;
          xhat_[off + i] = xh;
          y[off + i] = g * xh + bt;
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (gy.shape() != xhat_.shape()) throw Error(ErrorKind::kShapeMismatch, gamma_.name + ": gradient shape");
    const std::size_t batch = gy.dim(0), plane = gy.dim(2) * gy.dim(3);
    const T count = static_cast<T>(batch * plane);
    Tensor<T> gx(gy.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
      T sum_g{0}, sum_gx{0};
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * channels_ + c) * plane;
        const auto g = ConstArrayMap<T>(gy.data() + off, plane);
        sum_g += g.sum();
        sum_gx += (g * ConstArrayMap<T>(xhat_.data() + off, plane)).sum();
      }
      gamma_.grad[c] += sum_gx;
      beta_.grad[c] += sum_g;
      const T g = gamma_.value[c];
      const T s = inv_std_[c];
      const T mean_g = sum_g / count, mean_gx = sum_gx / count;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * channels_ + c) * plane;
        if (training_) {
          for (std::size_t i = 0; i < plane; ++i) {
            gx[off + i] = g * s * (gy[off + i] - mean_g - xhat_[off + i] * mean_gx);
          }
        } else {
          for (std::size_t i = 0; i < plane; ++i) gx[off + i] = g * s * gy[off + i];
        }
      }
    }
    return gx;
  }

  void collect(StateRefs<T>& refs) {
    refs.params.push_back(&gamma_);
    refs.params.push_back(&beta_);
    refs.buffers.push_back(&running_mean_);
    refs.buffers.push_back(&running_var_);
  }

  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }
  Buffer<T>& running_mean() { return running_mean_; }
  Buffer<T>& running_var() { return running_var_; }

 private:
  std::size_t channels_ = 0;
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  Parameter<T> gamma_, beta_;
  Buffer<T> running_mean_, running_var_;
  bool training_ = false;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

// Group normalization: per-sample statistics over channel groups; same in train and eval.
template <typename T>
class GroupNorm2d {
 public:
  GroupNorm2d() = default;
  GroupNorm2d(const std::string& name, std::size_t channels, std::size_t groups, double eps = 1e-5)
      : channels_(channels),
        groups_(groups),
        eps_(eps),
        gamma_(name + ".gamma", {channels}),
        beta_(name + ".beta", {channels}) {
    if (groups == 0 || channels % groups != 0) {
      throw Error(ErrorKind::kInvalidArgument, name + ": channels must be divisible by groups");
    }
    gamma_.value.fill(T{1});
  }

  void init(Rng&) {
    gamma_.value.fill(T{1});
    beta_.value.fill(T{0});
  }

  Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
    require_rank(x.shape(), 4, "groupnorm");
    if (x.dim(1) != channels_) throw Error(ErrorKind::kShapeMismatch, gamma_.name + ": channel count");
    const std::size_t batch = x.dim(0), plane = x.dim(2) * x.dim(3);
    const std::size_t per_group = channels_ / groups_;
    const std::size_t span = per_group * plane;
    xhat_ = Tensor<T>(x.shape());
    inv_std_.assign(batch * groups_, T{0});
    Tensor<T> y(x.shape());
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t g = 0; g < groups_; ++g) {
        const std::size_t off = (b * channels_ + g * per_group) * plane;
        double sum = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < span; ++i) sum += x[off + i];
        const double m = sum / static_cast<double>(span);
        for (std::size_t i = 0; i < span; ++i) sq += (x[off + i] - m) * (x[off + i] - m);
        const T inv = static_cast<T>(1.0 / std::sqrt(sq / static_cast<double>(span) + eps_));
        inv_std_[b * groups_ + g] = inv;
        for (std::size_t i = 0; i < span; ++i) {
          const std::size_t c = g * per_group + i / plane;
          const T xh = (x[off + i] - static_cast<T>(m)) * inv;
          xhat_[off + i] = xh;
          y[off + i] = gamma_.value[c] * xh + beta_.value[c];
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t batch = gy.dim(0), plane = gy.dim(2) * gy.dim(3);
    const std::size_t per_group = channels_ / groups_;
    const std::size_t span = per_group * plane;
    Tensor<T> gx(gy.shape());
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t g = 0; g < groups_; ++g) {
        const std::size_t off = (b * channels_ + g * per_group) * plane;
        T sum_d{0}, sum_dx{0};
        for (std::size_t i = 0; i < span; ++i) {
          const std::size_t c = g * per_group + i / plane;
          const T d = gy[off + i] * gamma_.value[c];
          sum_d += d;
          sum_dx += d * xhat_[off + i];
          gamma_.grad[c] += gy[off + i] * xhat_[off + i];
          beta_.grad[c] += gy[off + i];
        }
        const T n = static_cast<T>(span);
        const T inv = inv_std_[b * groups_ + g];
        for (std::size_t i = 0; i < span; ++i) {
          const std::size_t c = g * per_group + i / plane;
          const T d = gy[off + i] * gamma_.value[c];
          gx[off + i] = inv * (d - sum_d / n - xhat_[off + i] * sum_dx / n);
        }
      }
    }
    return gx;
  }

  void collect(StateRefs<T>& refs) {
    refs.params.push_back(&gamma_);
    refs.params.push_back(&beta_);
  }

 private:
  std::size_t channels_ = 0, groups_ = 1;
  double eps_ = 1e-5;
  Parameter<T> gamma_, beta_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

enum class NormKind { kBatch, kGroup };

template <typename T>
class Norm2d {
 public:
  Norm2d() = default;
  Norm2d(NormKind kind, const std::string& name, std::size_t channels, std::size_t groups = 8) {
    if (kind == NormKind::kBatch) {
      impl_ = BatchNorm2d<T>(name, channels);
    } else {
      impl_ = GroupNorm2d<T>(name, channels, std::min(groups, channels));
    }
  }
  void init(Rng& rng) {
    std::visit([&](auto& n) { n.init(rng); }, impl_);
  }
  Tensor<T> forward(const Tensor<T>& x, bool training) {
    return std::visit([&](auto& n) { return n.forward(x, training); }, impl_);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    return std::visit([&](auto& n) { return n.backward(gy); }, impl_);
  }
  void collect(StateRefs<T>& refs) {
    std::visit([&](auto& n) { n.collect(refs); }, impl_);
  }

 private:
  std::variant<BatchNorm2d<T>, GroupNorm2d<T>> impl_;
};

template <typename T>
class Relu {
 public:
  // NaN passes through so a poisoned input surfaces as a non-finite loss.
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] < T{0} ? T{0} : x[i];
    output_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape());
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = output_[i] > T{0} ? gy[i] : T{0};
    return gx;
  }

 private:
  Tensor<T> output_;
};

// [B, C, H, W] -> [B, C]
template <typename T>
class GlobalAvgPool {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    require_rank(x.shape(), 4, "global_avg_pool");
    in_shape_ = x.shape();
    const std::size_t bc = x.dim(0) * x.dim(1), plane = x.dim(2) * x.dim(3);
    Tensor<T> y({x.dim(0), x.dim(1)});
    for (std::size_t i = 0; i < bc; ++i) {
      T s{0};
      for (std::size_t j = 0; j < plane; ++j) s += x[i * plane + j];
      y[i] = s / static_cast<T>(plane);
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(in_shape_);
    const std::size_t bc = in_shape_[0] * in_shape_[1], plane = in_shape_[2] * in_shape_[3];
    for (std::size_t i = 0; i < bc; ++i) {
      const T g = gy[i] / static_cast<T>(plane);
      for (std::size_t j = 0; j < plane; ++j) gx[i * plane + j] = g;
    }
    return gx;
  }

 private:
  Shape in_shape_;
};

enum class LinearInit { kHe, kGlorot };

// Fully connected: [B, in] -> [B, out], weight stored [out, in].
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, LinearInit init = LinearInit::kHe)
      : in_(in), out_(out), init_(init), weight_(name + ".weight", {out, in}), bias_(name + ".bias", {out}) {}

  void init(Rng& rng) {
    const double bound = init_ == LinearInit::kHe ? std::sqrt(6.0 / static_cast<double>(in_))
                                                  : std::sqrt(6.0 / static_cast<double>(in_ + out_));
    fill_uniform(weight_.value, rng, bound);
    bias_.value.fill(T{0});
  }

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

  Tensor<T> forward(const Tensor<T>& x) {
    require_rank(x.shape(), 2, "linear");
    if (x.dim(1) != in_) {
      throw Error(ErrorKind::kShapeMismatch, weight_.name + ": input width " + std::to_string(x.dim(1)) +
                                                 " != " + std::to_string(in_));
    }
    input_ = x;
    const std::size_t batch = x.dim(0);
    Tensor<T> y({batch, out_});
    MatMap<T> ym(y.data(), batch, out_);
    ym.noalias() = ConstMatMap<T>(x.data(), batch, in_) * ConstMatMap<T>(weight_.value.data(), out_, in_).transpose();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < out_; ++o) ym(b, o) += bias_.value[o];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t batch = input_.dim(0);
    if (gy.shape() != Shape{batch, out_}) throw Error(ErrorKind::kShapeMismatch, weight_.name + ": gradient shape");
    ConstMatMap<T> g(gy.data(), batch, out_);
    MatMap<T>(weight_.grad.data(), out_, in_).noalias() += g.transpose() * ConstMatMap<T>(input_.data(), batch, in_);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += g(b, o);
    }
    Tensor<T> gx({batch, in_});
    MatMap<T>(gx.data(), batch, in_).noalias() = g * ConstMatMap<T>(weight_.value.data(), out_, in_);
    return gx;
  }

  void collect(StateRefs<T>& refs) {
    refs.params.push_back(&weight_);
    refs.params.push_back(&bias_);
  }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  LinearInit init_ = LinearInit::kHe;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

// Inverted dropout: kept units are scaled by 1/(1-rate) during training.
template <typename T>
class Dropout {
 public:
  explicit Dropout(double rate = 0.5) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw Error(ErrorKind::kInvalidArgument, "dropout rate must be in [0, 1)");
  }

  double rate() const { return rate_; }

  Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) {
    active_ = training && rate_ > 0.0;
    if (!active_) return x;
    const T scale = static_cast<T>(1.0 / (1.0 - rate_));
    mask_.resize(x.size());
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = rng.uniform() >= rate_ ? scale : T{0};
      y[i] = x[i] * mask_[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (!active_) return gy;
    Tensor<T> gx(gy.shape());
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * mask_[i];
    return gx;
  }

 private:
  double rate_;
  bool active_ = false;
  std::vector<T> mask_;
};

}  // namespace qsbd::nn
