#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <new>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qsbd/core/error.hpp"

namespace qsbd::nn {

using Shape = std::vector<std::size_t>;

// 64-byte aligned storage. Vectorized reductions peel a different number of leading
// elements depending on the start address, so buffers handed to Eigen must sit at
// the same alignment on every run for results to be bit-reproducible.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

inline std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

// Dense row-major tensor of up to four dims, (batch, channels, height, width).
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {
    if (shape_.size() > 4) throw Error(ErrorKind::kShapeMismatch, "tensor rank above 4");
  }
  Tensor(Shape shape, const std::vector<T>& values)
      : shape_(std::move(shape)), values_(values.begin(), values.end()) {
    if (values_.size() != shape_size(shape_)) {
      throw Error(ErrorKind::kShapeMismatch,
                  "value count " + std::to_string(values_.size()) + " does not fit " + shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  AlignedVector<T>& storage() { return values_; }
  const AlignedVector<T>& storage() const { return values_; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return values_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return values_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }
  void reshape(Shape shape) {
    if (shape_size(shape) != values_.size()) {
      throw Error(ErrorKind::kShapeMismatch, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
  }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(values_.begin(), values_.end()));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  AlignedVector<T> values_;
};

inline void require_rank(const Shape& s, std::size_t rank, const char* who) {
  if (s.size() != rank) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(who) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(s));
  }
}

// Learnable tensor plus its gradient accumulator.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}
  void zero_grad() { grad.fill(T{0}); }
};

// Non-learnable state that still belongs in checkpoints (batch-norm running stats).
template <typename T>
struct Buffer {
  std::string name;
  Tensor<T> value;
};

template <typename T>
struct StateRefs {
  std::vector<Parameter<T>*> params;
  std::vector<Buffer<T>*> buffers;
};

}  // namespace qsbd::nn
