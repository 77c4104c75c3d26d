#include "tracknet/rstr.hpp"

#include <cmath>

#include "tracknet/ops.hpp"

namespace tracknet::rstr {
namespace {

constexpr int kFusionInputs = kFrames + 2 + 2;

std::string block_name(bool temporal, int index) {
  return std::string("rstr.tsatt.") + (temporal ? "temporal" : "spatial") + std::to_string(index);
}

Var split_heads(Tape& t, Var x, int heads) {
  const Shape s = t.value(x).shape();
  const Var r = ops::reshape(t, x, Shape{s.n * s.c, s.h, heads, s.w / heads});
  return ops::permute(t, r, {0, 2, 1, 3});
}

Var merge_heads(Tape& t, Var x, const Shape& original) {
  const Var p = ops::permute(t, x, {0, 2, 1, 3});
  return ops::reshape(t, p, original);
}

}  // namespace

void validate(const TsattConfig& cfg, int height, int width) {
  if (cfg.patch < 1 || height % cfg.patch != 0 || width % cfg.patch != 0) {
    throw TensorError("tsatt: height " + std::to_string(height) + " and width " + std::to_string(width) +
                      " must be divisible by patch size " + std::to_string(cfg.patch));
  }
  if (cfg.dim < 1 || cfg.heads < 1 || cfg.dim % cfg.heads != 0) {
    throw TensorError("tsatt: embed dim " + std::to_string(cfg.dim) + " must be divisible by heads " +
                      std::to_string(cfg.heads));
  }
  if (cfg.temporal_blocks < 0 || cfg.spatial_blocks < 0 || cfg.ffn_multiplier < 1) {
    throw TensorError("tsatt: invalid block configuration");
  }
  if (cfg.mask_rate < 0.0 || cfg.mask_rate >= 1.0) {
    throw TensorError("tsatt: mask rate must lie in [0, 1)");
  }
}

void add_draft_head(ModelState& state, int in_channels, Rng& rng) {
  nn::add_conv2d(state, "rstr.draft", in_channels, kFrames, 1, true, rng);
}

Var make_draft(ForwardContext& ctx, Var features) { return nn::conv2d(ctx, "rstr.draft", features, 0); }

void add_fusion(ModelState& state) {
  Tensor4 w(Shape{kFrames, kFusionInputs, 1, 1});
  for (int c = 0; c < kFrames; ++c) w.at(c, c, 0, 0) = 1.0;
  state.add("rstr.fusion.weight", std::move(w), ParamGroup::decay);
  state.add("rstr.fusion.bias", Tensor4(Shape{1, kFrames, 1, 1}), ParamGroup::no_decay);
}

Var fuse_motion(ForwardContext& ctx, Var draft, Var a1, Var a2) {
  const Shape& d = ctx.tape.value(draft).shape();
  if (d.c != kFrames) throw TensorError("fuse_motion: draft must have 3 channels, got " + d.str());
  for (const Var a : {a1, a2}) {
    const Shape& s = ctx.tape.value(a).shape();
    if (s.c != 2 || s.n != d.n || s.h != d.h || s.w != d.w) {
      throw TensorError("fuse_motion: attention stack " + s.str() + " incompatible with draft " + d.str());
    }
  }
  const Var stacked = ops::concat(ctx.tape, {draft, a1, a2});
  return nn::conv2d(ctx, "rstr.fusion", stacked, 0);
}

Var stochastic_mask(Tape& tape, Var x, double rate, Mode mode, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) {
    throw TensorError("stochastic_mask: rate " + std::to_string(rate) + " outside [0, 1)");
  }
  return ops::dropout(tape, x, rate, mode, seed);
}

void add_tsatt(ModelState& state, const TsattConfig& cfg, int height, int width, Rng& rng) {
  validate(cfg, height, width);
  const int pp = cfg.patch * cfg.patch;
  const int d = cfg.dim;
  const int spatial = cfg.spatial_tokens(height, width);
  nn::add_linear(state, "rstr.tsatt.embed", pp, d, rng);
  Tensor4 pos_s(Shape{1, 1, spatial, d});
  Tensor4 pos_t(Shape{1, kFrames, 1, d});
  for (auto& v : pos_s.data()) v = 0.02 * rng.normal();
  for (auto& v : pos_t.data()) v = 0.02 * rng.normal();
  state.add("rstr.tsatt.pos_spatial", std::move(pos_s), ParamGroup::no_decay);
  state.add("rstr.tsatt.pos_temporal", std::move(pos_t), ParamGroup::no_decay);

  auto add_block = [&](const std::string& name) {
    nn::add_layer_norm(state, name + ".ln1", d);
    nn::add_linear(state, name + ".q", d, d, rng);
    nn::add_linear(state, name + ".k", d, d, rng);
    nn::add_linear(state, name + ".v", d, d, rng);
    nn::add_linear(state, name + ".o", d, d, rng);
    nn::add_layer_norm(state, name + ".ln2", d);
    nn::add_linear(state, name + ".ff1", d, cfg.ffn_multiplier * d, rng);
    nn::add_linear(state, name + ".ff2", cfg.ffn_multiplier * d, d, rng);
  };
  for (int i = 0; i < cfg.temporal_blocks; ++i) add_block(block_name(true, i));
  for (int i = 0; i < cfg.spatial_blocks; ++i) add_block(block_name(false, i));
  nn::add_layer_norm(state, "rstr.tsatt.norm", d);
  // zero-initialized so the residual starts at exactly 0
  nn::add_linear(state, "rstr.tsatt.head", d, pp, rng, /*zero_init=*/true);
}

Var attention_block(ForwardContext& ctx, const std::string& name, const TsattConfig& cfg, Var tokens) {
  Tape& t = ctx.tape;
  const Shape s = t.value(tokens).shape();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg.dim / cfg.heads));

  const Var h = nn::layer_norm(ctx, name + ".ln1", tokens);
  const Var q = split_heads(t, nn::linear(ctx, name + ".q", h), cfg.heads);
  const Var k = split_heads(t, nn::linear(ctx, name + ".k", h), cfg.heads);
  const Var v = split_heads(t, nn::linear(ctx, name + ".v", h), cfg.heads);
  const Var scores = ops::softmax(t, ops::scale(t, ops::matmul(t, q, k, /*transpose_rhs=*/true), inv_sqrt));
  const Var mixed = merge_heads(t, ops::matmul(t, scores, v), s);
  const Var x = ops::add(t, tokens, nn::linear(ctx, name + ".o", mixed));

  const Var h2 = nn::layer_norm(ctx, name + ".ln2", x);
  const Var ff = nn::linear(ctx, name + ".ff2", ops::relu(t, nn::linear(ctx, name + ".ff1", h2)));
  return ops::add(t, x, ff);
}

Var tsatt_head(ForwardContext& ctx, const TsattConfig& cfg, Var x) {
  Tape& t = ctx.tape;
  const Shape s = t.value(x).shape();
  if (s.c != kFrames) throw TensorError("tsatt_head: expected 3 frame channels, got " + s.str());
  validate(cfg, s.h, s.w);
  const int p = cfg.patch;

  Var tok = nn::linear(ctx, "rstr.tsatt.embed", ops::patchify(t, x, p));  // (B, 3, S, d)
  tok = ops::add(t, tok, ctx.param("rstr.tsatt.pos_spatial"));
  tok = ops::add(t, tok, ctx.param("rstr.tsatt.pos_temporal"));

  auto temporal = [&](Var in) {
    Var r = ops::permute(t, in, {0, 2, 1, 3});  // (B, S, 3, d): attend across frames
    for (int i = 0; i < cfg.temporal_blocks; ++i) r = attention_block(ctx, block_name(true, i), cfg, r);
    return ops::permute(t, r, {0, 2, 1, 3});
  };
  auto spatial = [&](Var in) {
    for (int i = 0; i < cfg.spatial_blocks; ++i) in = attention_block(ctx, block_name(false, i), cfg, in);
    return in;
  };
  tok = cfg.temporal_first ? spatial(temporal(tok)) : temporal(spatial(tok));

  const Var out = nn::linear(ctx, "rstr.tsatt.head", nn::layer_norm(ctx, "rstr.tsatt.norm", tok));  // (B, 3, S, p*p)
  // channel f*p*p + e at low-res position -> pixel_shuffle places element e inside the patch
  const Var grouped = ops::permute(t, out, {0, 1, 3, 2});
  const Var planes = ops::reshape(t, grouped, Shape{s.n, kFrames * p * p, s.h / p, s.w / p});
  return ops::pixel_shuffle(t, planes, p);
}

Var refine(Tape& tape, Var base, Var residual) {
  if (!(tape.value(base).shape() == tape.value(residual).shape())) {
    throw TensorError("refine: shape mismatch " + tape.value(base).shape().str() + " vs " +
                      tape.value(residual).shape().str());
  }
  return ops::sigmoid(tape, ops::add(tape, base, residual));
}

}  // namespace tracknet::rstr
