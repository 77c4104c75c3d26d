#include "tracknet/cost.hpp"

namespace tracknet {
namespace macs {

std::uint64_t conv(int cin, int cout, int kh, int kw, int hout, int wout) {
  return static_cast<std::uint64_t>(cout) * cin * kh * kw * hout * wout;
}

std::uint64_t attention(int tokens, int dim) {
  const std::uint64_t t = tokens;
  const std::uint64_t d = dim;
  return 3 * t * d * d + t * t * d + t * t * d + t * d * d;
}

std::uint64_t feed_forward(int tokens, int dim, int multiplier) {
  return 2 * static_cast<std::uint64_t>(tokens) * dim * (static_cast<std::uint64_t>(multiplier) * dim);
}

}  // namespace macs

FlopBreakdown estimate_flops(const ModelConfig& cfg, int batch) {
  validate(cfg);
  FlopBreakdown f;
  const auto b = cfg.resolved_backbone();
  const int levels = static_cast<int>(b.widths.size());
  for (int level = 0; level < levels; ++level) {
    const int h = cfg.height >> level;
    const int w = cfg.width >> level;
    const int width = b.widths[level];
    const int enc_in = level == 0 ? b.in_channels : b.widths[level - 1];
    for (int c = 0; c < b.convs_per_stage; ++c) f.backbone += macs::conv(c == 0 ? enc_in : width, width, 3, 3, h, w);
    if (level + 1 < levels) {
      const int dec_in = backbone::decoder_input_channels(b, level);
      for (int c = 0; c < b.convs_per_stage; ++c) f.backbone += macs::conv(c == 0 ? dec_in : width, width, 3, 3, h, w);
    }
  }
  f.draft = macs::conv(b.out_channels(), rstr::kFrames, 1, 1, cfg.height, cfg.width);
  if (cfg.variant == Variant::v5) f.fusion = macs::conv(rstr::kFrames + 4, rstr::kFrames, 1, 1, cfg.height, cfg.width);

  if (has_rstr(cfg.variant)) {
    const auto& t = cfg.tsatt;
    const int spatial = t.spatial_tokens(cfg.height, cfg.width);
    const int total = rstr::kFrames * spatial;
    const std::uint64_t pp = static_cast<std::uint64_t>(t.patch) * t.patch;
    f.tsatt += total * pp * t.dim;  // patch embedding
    for (int i = 0; i < t.temporal_blocks; ++i) {
      f.tsatt += static_cast<std::uint64_t>(spatial) * macs::attention(rstr::kFrames, t.dim);
      f.tsatt += macs::feed_forward(total, t.dim, t.ffn_multiplier);
    }
    for (int i = 0; i < t.spatial_blocks; ++i) {
      f.tsatt += rstr::kFrames * macs::attention(spatial, t.dim);
      f.tsatt += macs::feed_forward(total, t.dim, t.ffn_multiplier);
    }
    f.tsatt += total * static_cast<std::uint64_t>(t.dim) * pp;  // residual projection
  }
  f.backbone *= batch;
  f.draft *= batch;
  f.fusion *= batch;
  f.tsatt *= batch;
  return f;
}

}  // namespace tracknet
