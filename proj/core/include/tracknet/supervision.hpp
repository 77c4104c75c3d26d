#pragma once

#include <cstddef>

#include "tracknet/tensor.hpp"

namespace tracknet::supervision {

struct GroundTruthSpec {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 3.0;
  bool visible = false;
};

struct LossValue {
  double loss = 0.0;
  std::size_t count = 0;
};

/// Binary disk: 1 where (x - cx)^2 + (y - cy)^2 <= r^2, pixel centers at
/// integer coordinates. All zeros when the ball is not visible.
/// Returns (1, 1, height, width).
Tensor4 make_gt_heatmap(const GroundTruthSpec& spec, int height, int width);

/// Focal-weighted binary cross-entropy, probabilities clamped to
/// [1e-7, 1 - 1e-7]:
///   L = -1/N sum[(1-p)^2 y log p + p^2 (1-y) log(1-p)]
LossValue wbce_loss(const Tensor4& p, const Tensor4& y);

}  // namespace tracknet::supervision
