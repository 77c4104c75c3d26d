#include "tracknet/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace tracknet {

int Shape::dim(int axis) const {
  switch (axis) {
    case 0: return n;
    case 1: return c;
    case 2: return h;
    case 3: return w;
    default: throw TensorError("Shape::dim: axis " + std::to_string(axis) + " out of range");
  }
}

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

Tensor4::Tensor4(Shape shape, double fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw TensorError("Tensor4: negative dimension in shape " + shape.str());
  }
  data_.assign(shape.size(), fill);
}

Tensor4::Tensor4(Shape shape, std::vector<double> values) : shape_(shape), data_(values.begin(), values.end()) {
  if (data_.size() != shape.size()) {
    throw TensorError("Tensor4: shape " + shape.str() + " needs " + std::to_string(shape.size()) +
                      " values, got " + std::to_string(data_.size()));
  }
}

double Tensor4::item() const {
  if (data_.size() != 1) {
    throw TensorError("Tensor4::item: tensor of shape " + shape_.str() + " is not a scalar");
  }
  return data_[0];
}

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor4 Tensor4::reshaped(Shape shape) const {
  if (shape.size() != size()) throw TensorError("reshaped: cannot view " + shape_.str() + " as " + shape.str());
  Tensor4 out = *this;
  out.shape_ = shape;
  return out;
}

void Tensor4::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor4 Tensor4::channels(int start, int count) const {
  if (start < 0 || count < 0 || start + count > shape_.c) {
    throw TensorError("Tensor4::channels: range [" + std::to_string(start) + ", " +
                      std::to_string(start + count) + ") outside " + shape_.str());
  }
  Tensor4 out(Shape{shape_.n, count, shape_.h, shape_.w});
  const std::size_t plane = static_cast<std::size_t>(shape_.h) * shape_.w;
  for (int n = 0; n < shape_.n; ++n) {
    const auto src = data_.begin() + static_cast<std::ptrdiff_t>(offset(n, start, 0, 0));
    std::copy(src, src + static_cast<std::ptrdiff_t>(plane * count),
              out.data_.begin() + static_cast<std::ptrdiff_t>(out.offset(n, 0, 0, 0)));
  }
  return out;
}

Tensor4 Tensor4::sample(int index) const {
  if (index < 0 || index >= shape_.n) {
    throw TensorError("Tensor4::sample: index " + std::to_string(index) + " outside " + shape_.str());
  }
  Tensor4 out(Shape{1, shape_.c, shape_.h, shape_.w});
  const std::size_t per = out.size();
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(per * index), per, out.data_.begin());
  return out;
}

Tensor4 stack_batch(std::span<const Tensor4> parts) {
  if (parts.empty()) throw TensorError("stack_batch: no parts");
  Shape s = parts.front().shape();
  int total = 0;
  for (const auto& p : parts) {
    const Shape& q = p.shape();
    if (q.c != s.c || q.h != s.h || q.w != s.w) {
      throw TensorError("stack_batch: shape " + q.str() + " does not match " + s.str());
    }
    total += q.n;
  }
  s.n = total;
  std::vector<double> values;
  values.reserve(s.size());
  for (const auto& p : parts) values.insert(values.end(), p.data().begin(), p.data().end());
  return Tensor4(s, std::move(values));
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  if (!(a.shape() == b.shape())) {
    throw TensorError("max_abs_diff: shapes " + a.shape().str() + " and " + b.shape().str() + " differ");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace tracknet
