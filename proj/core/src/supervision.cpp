#include "tracknet/supervision.hpp"

#include <algorithm>
#include <cmath>

#include "tracknet/primitives.hpp"

namespace tracknet::supervision {

Tensor4 make_gt_heatmap(const GroundTruthSpec& spec, int height, int width) {
  if (height <= 0 || width <= 0) throw TensorError("make_gt_heatmap: dimensions must be positive");
  if (spec.radius <= 0.0) throw TensorError("make_gt_heatmap: radius must be positive");
  Tensor4 y(Shape{1, 1, height, width});
  if (!spec.visible) return y;
  const double r2 = spec.radius * spec.radius;
  const int y0 = std::max(0, static_cast<int>(std::floor(spec.cy - spec.radius)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(spec.cy + spec.radius)));
  const int x0 = std::max(0, static_cast<int>(std::floor(spec.cx - spec.radius)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(spec.cx + spec.radius)));
  for (int py = y0; py <= y1; ++py) {
    for (int px = x0; px <= x1; ++px) {
      const double dx = px - spec.cx;
      const double dy = py - spec.cy;
      if (dx * dx + dy * dy <= r2) y.at(0, 0, py, px) = 1.0;
    }
  }
  return y;
}

LossValue wbce_loss(const Tensor4& p, const Tensor4& y) {
  if (!(p.shape() == y.shape())) {
    throw TensorError("wbce_loss: shape mismatch " + p.shape().str() + " vs " + y.shape().str());
  }
  std::vector<Tensor4> aux;
  const Tensor4* inputs[] = {&p, &y};
  const Tensor4 out = primitive_forward(PrimitiveKind::wbce, inputs, OpParams{}, aux);
  return {out.item(), p.size()};
}

}  // namespace tracknet::supervision
