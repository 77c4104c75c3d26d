#pragma once

#include <cstdint>
#include <string>

#include "tracknet/nn.hpp"

/// Residual-driven spatio-temporal refinement: a 1x1 draft head, a
/// motion-aware fusion of the draft with attention maps, stochastic context
/// masking, and a factorized-attention Transformer head that predicts a
/// residual added to the draft logits before the final sigmoid.
namespace tracknet::rstr {

inline constexpr int kFrames = 3;

struct TsattConfig {
  int patch = 8;
  int dim = 24;
  int heads = 4;
  int temporal_blocks = 1;
  int spatial_blocks = 1;
  bool temporal_first = true;
  int ffn_multiplier = 2;
  double mask_rate = 0.1;

  [[nodiscard]] int spatial_tokens(int height, int width) const { return (height / patch) * (width / patch); }
  [[nodiscard]] int token_count(int height, int width) const { return kFrames * spatial_tokens(height, width); }
};

void validate(const TsattConfig& cfg, int height, int width);

// ---- draft -----------------------------------------------------------------

void add_draft_head(ModelState& state, int in_channels, Rng& rng);
/// 1x1 conv to 3 logit channels, one per frame.
Var make_draft(ForwardContext& ctx, Var features);

// ---- fusion ----------------------------------------------------------------

/// 1x1 conv 7 -> 3 initialized to pass the draft through unchanged.
void add_fusion(ModelState& state);
/// concat [draft(3), a1(2), a2(2)] -> 1x1 conv -> 3 channels.
Var fuse_motion(ForwardContext& ctx, Var draft, Var a1, Var a2);

// ---- masking ---------------------------------------------------------------

/// Inverted dropout in train mode, identity in infer mode. Throws for rate >= 1.
Var stochastic_mask(Tape& tape, Var x, double rate, Mode mode, std::uint64_t seed);

// ---- TSATT head ------------------------------------------------------------

void add_tsatt(ModelState& state, const TsattConfig& cfg, int height, int width, Rng& rng);

/// Multi-head self-attention + feed-forward over the token axis of
/// (B, G, T, D) tokens, pre-norm residual form.
Var attention_block(ForwardContext& ctx, const std::string& name, const TsattConfig& cfg, Var tokens);

/// (B, 3, H, W) draft logits -> (B, 3, H, W) residual logits.
Var tsatt_head(ForwardContext& ctx, const TsattConfig& cfg, Var x);

/// sigma(base + residual).
Var refine(Tape& tape, Var base, Var residual);

}  // namespace tracknet::rstr
