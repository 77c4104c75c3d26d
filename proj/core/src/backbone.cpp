#include "tracknet/backbone.hpp"

#include <string>

#include "tracknet/ops.hpp"

namespace tracknet::backbone {
namespace {

std::string enc_name(int level, int conv) {
  return "backbone.enc" + std::to_string(level) + ".conv" + std::to_string(conv);
}

std::string dec_name(int level, int conv) {
  return "backbone.dec" + std::to_string(level) + ".conv" + std::to_string(conv);
}

void add_block(ModelState& s, const std::string& name, int cin, int cout, Rng& rng) {
  nn::add_conv2d(s, name, cin, cout, 3, false, rng);
  nn::add_batch_norm(s, name + ".bn", cout);
}

Var block(ForwardContext& ctx, const std::string& name, Var x) {
  return ops::relu(ctx.tape, nn::batch_norm(ctx, name + ".bn", nn::conv2d(ctx, name, x, 1)));
}

}  // namespace

void validate(const BackboneConfig& cfg) {
  if (cfg.widths.size() < 2) throw TensorError("backbone: need at least two resolution levels");
  for (const int w : cfg.widths) {
    if (w <= 0) throw TensorError("backbone: widths must be positive");
  }
  if (cfg.convs_per_stage < 1) throw TensorError("backbone: convs_per_stage must be >= 1");
  if (cfg.in_channels < 1) throw TensorError("backbone: in_channels must be >= 1");
}

int decoder_input_channels(const BackboneConfig& cfg, int level) {
  return cfg.widths.at(level + 1) + cfg.widths.at(level);
}

void add_backbone(ModelState& state, const BackboneConfig& cfg, Rng& rng) {
  validate(cfg);
  const int levels = static_cast<int>(cfg.widths.size());
  int cin = cfg.in_channels;
  for (int level = 0; level < levels; ++level) {
    for (int c = 0; c < cfg.convs_per_stage; ++c) {
      add_block(state, enc_name(level, c), c == 0 ? cin : cfg.widths[level], cfg.widths[level], rng);
    }
    cin = cfg.widths[level];
  }
  for (int level = levels - 2; level >= 0; --level) {
    const int skip_in = decoder_input_channels(cfg, level);
    for (int c = 0; c < cfg.convs_per_stage; ++c) {
      add_block(state, dec_name(level, c), c == 0 ? skip_in : cfg.widths[level], cfg.widths[level], rng);
    }
    if (state.value(dec_name(level, 0) + ".weight").shape().c != skip_in) {
      throw TensorError("backbone: skip channel mismatch at decoder level " + std::to_string(level));
    }
  }
}

Var backbone_forward(ForwardContext& ctx, const BackboneConfig& cfg, Var x) {
  const Shape& s = ctx.tape.value(x).shape();
  if (s.c != cfg.in_channels) {
    throw TensorError("backbone: expected " + std::to_string(cfg.in_channels) + " input channels, got " + s.str());
  }
  const int div = cfg.divisor();
  if (s.h % div != 0 || s.w % div != 0) {
    throw TensorError("backbone: input height and width must be divisible by " + std::to_string(div) + ", got " +
                      s.str());
  }
  const int levels = static_cast<int>(cfg.widths.size());
  std::vector<Var> skips;
  Var h = x;
  for (int level = 0; level < levels; ++level) {
    for (int c = 0; c < cfg.convs_per_stage; ++c) h = block(ctx, enc_name(level, c), h);
    if (level + 1 < levels) {
      skips.push_back(h);
      h = ops::max_pool2d(ctx.tape, h);
    }
  }
  for (int level = levels - 2; level >= 0; --level) {
    h = ops::concat(ctx.tape, {ops::nearest_upsample(ctx.tape, h), skips[level]});
    for (int c = 0; c < cfg.convs_per_stage; ++c) h = block(ctx, dec_name(level, c), h);
  }
  return h;
}

}  // namespace tracknet::backbone
