#pragma once

#include <vector>

#include "tracknet/nn.hpp"

namespace tracknet::backbone {

/// U-Net style MIMO encoder-decoder. widths[i] is the channel count of
/// resolution level i; there are widths.size() - 1 pooling steps.
struct BackboneConfig {
  std::vector<int> widths{8, 16, 32, 64};
  int convs_per_stage = 2;
  int in_channels = 13;

  /// Input height and width must be multiples of this.
  [[nodiscard]] int divisor() const { return 1 << (static_cast<int>(widths.size()) - 1); }
  [[nodiscard]] int out_channels() const { return widths.front(); }
};

void validate(const BackboneConfig& cfg);

/// Channels entering decoder level `level` (upsampled deeper level plus skip).
int decoder_input_channels(const BackboneConfig& cfg, int level);

void add_backbone(ModelState& state, const BackboneConfig& cfg, Rng& rng);

/// (N, in_channels, H, W) -> (N, widths[0], H, W).
Var backbone_forward(ForwardContext& ctx, const BackboneConfig& cfg, Var x);

}  // namespace tracknet::backbone
