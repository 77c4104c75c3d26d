#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "tracknet/backbone.hpp"
#include "tracknet/mdd.hpp"
#include "tracknet/rstr.hpp"

namespace tracknet {

/// Ablation variants: motion input (none / sign-blind / polarity) crossed
/// with the presence of the refinement head.
enum class Variant { v2, v4like, v2_mdd, v2_rstr, v5 };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

[[nodiscard]] bool has_motion(Variant v);
[[nodiscard]] bool has_rstr(Variant v);
/// 9 for v2 and v2_rstr, 13 for every motion variant.
[[nodiscard]] int input_channels(Variant v);

struct ModelConfig {
  Variant variant = Variant::v5;
  int height = 48;
  int width = 64;
  backbone::BackboneConfig backbone;
  rstr::TsattConfig tsatt;
  mdd::MddConfig mdd;

  /// Backbone config with in_channels matched to the variant.
  [[nodiscard]] backbone::BackboneConfig resolved_backbone() const;
};

void validate(const ModelConfig& cfg);

/// Fresh parameters drawn from `seed`.
ModelState init_model(const ModelConfig& cfg, std::uint64_t seed);

struct ForwardOptions {
  /// Mode of the backbone's batch-norm layers.
  Mode backbone_mode = Mode::infer;
  /// Mode of the stochastic context mask.
  Mode head_mode = Mode::infer;
  std::uint64_t mask_seed = 0;
};

/// Named intermediates of one forward pass. Unused stages stay invalid.
struct ForwardResult {
  Var input;       // 9- or 13-channel backbone input
  Var a1;          // attention stack for the first interval
  Var a2;          // attention stack for the second interval
  Var draft;       // 3 logit channels
  Var draft_mdd;   // after motion fusion (== draft without fusion)
  Var base;        // after stochastic masking
  Var residual;    // TSATT output
  Var heatmaps;    // final probabilities (N, 3, H, W)
};

/// prev/curr/next are (N, 3, H, W) frames already on the tape.
ForwardResult forward(ForwardContext& ctx, const ModelConfig& cfg, Var prev, Var curr, Var next,
                      const ForwardOptions& opts);

/// Inference-mode heatmaps for a batch of triplets.
Tensor4 predict(const ModelState& state, const ModelConfig& cfg, const mdd::FrameTriplet& triplet);

}  // namespace tracknet
