#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tracknet {

/// Error raised for malformed shapes, non-finite values and other contract
/// violations inside the tensor core. The message names the operation and
/// the offending dimensions.
class TensorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Storage is 64-byte aligned so vectorised kernels take the same code path
/// (and summation order) on every run, whatever address malloc returns.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

/// (batch, channels, height, width). Token tensors reuse the same four axes
/// as (batch, group, token, feature).
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  [[nodiscard]] int dim(int axis) const;
  [[nodiscard]] std::string str() const;
  bool operator==(const Shape&) const = default;
};

/// Dense rank-4 array of doubles, row-major over (n, c, h, w).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape shape, double fill = 0.0);
  Tensor4(Shape shape, std::vector<double> values);

  static Tensor4 scalar(double v) { return Tensor4(Shape{1, 1, 1, 1}, v); }

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }
  [[nodiscard]] std::span<const double> values() const { return data_; }

  [[nodiscard]] std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  double& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  [[nodiscard]] double at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Value of a single-element tensor.
  [[nodiscard]] double item() const;
  [[nodiscard]] bool all_finite() const;

  void fill(double v);
  /// Copy of channels [start, start + count) of every sample.
  [[nodiscard]] Tensor4 channels(int start, int count) const;
  /// Same elements under a shape with the same size.
  [[nodiscard]] Tensor4 reshaped(Shape shape) const;
  /// Copy of sample `index` as a batch of one.
  [[nodiscard]] Tensor4 sample(int index) const;

  bool operator==(const Tensor4&) const = default;

 private:
  Shape shape_{0, 0, 0, 0};
  AlignedBuffer data_;
};

/// Concatenates along the batch axis; all parts must agree on (c, h, w).
Tensor4 stack_batch(std::span<const Tensor4> parts);

/// Largest absolute elementwise difference; shapes must match.
double max_abs_diff(const Tensor4& a, const Tensor4& b);

}  // namespace tracknet
