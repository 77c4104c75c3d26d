#include "tracknet/model.hpp"

#include "tracknet/ops.hpp"

namespace tracknet {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::v2: return "v2";
    case Variant::v4like: return "v4like";
    case Variant::v2_mdd: return "v2_mdd";
    case Variant::v2_rstr: return "v2_rstr";
    case Variant::v5: return "v5";
  }
  return "v5";
}

Variant variant_from_string(std::string_view s) {
  for (const Variant v : {Variant::v2, Variant::v4like, Variant::v2_mdd, Variant::v2_rstr, Variant::v5}) {
    if (s == to_string(v)) return v;
  }
  throw TensorError("unknown variant '" + std::string(s) + "' (expected v2, v4like, v2_mdd, v2_rstr or v5)");
}

bool has_motion(Variant v) { return v == Variant::v4like || v == Variant::v2_mdd || v == Variant::v5; }
bool has_rstr(Variant v) { return v == Variant::v2_rstr || v == Variant::v5; }
int input_channels(Variant v) { return has_motion(v) ? mdd::kAugmentedChannels : 9; }

backbone::BackboneConfig ModelConfig::resolved_backbone() const {
  backbone::BackboneConfig b = backbone;
  b.in_channels = input_channels(variant);
  return b;
}

void validate(const ModelConfig& cfg) {
  if (cfg.height <= 0 || cfg.width <= 0) throw TensorError("model: resolution must be positive");
  const auto b = cfg.resolved_backbone();
  backbone::validate(b);
  if (cfg.height % b.divisor() != 0 || cfg.width % b.divisor() != 0) {
    throw TensorError("model: resolution " + std::to_string(cfg.width) + "x" + std::to_string(cfg.height) +
                      " must be divisible by " + std::to_string(b.divisor()));
  }
  if (has_rstr(cfg.variant)) rstr::validate(cfg.tsatt, cfg.height, cfg.width);
  if (cfg.mdd.eps <= 0.0) throw TensorError("model: mdd eps must be positive");
}

ModelState init_model(const ModelConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  ModelState state;
  Rng rng(seed);
  if (has_motion(cfg.variant)) mdd::add_parameters(state, cfg.mdd);
  const auto b = cfg.resolved_backbone();
  backbone::add_backbone(state, b, rng);
  rstr::add_draft_head(state, b.out_channels(), rng);
  if (cfg.variant == Variant::v5) rstr::add_fusion(state);
  if (has_rstr(cfg.variant)) rstr::add_tsatt(state, cfg.tsatt, cfg.height, cfg.width, rng);
  return state;
}

ForwardResult forward(ForwardContext& ctx, const ModelConfig& cfg, Var prev, Var curr, Var next,
                      const ForwardOptions& opts) {
  Tape& t = ctx.tape;
  ForwardResult r;
  const Mode saved = ctx.mode;
  ctx.mode = opts.backbone_mode;

  if (has_motion(cfg.variant)) {
    const auto encoding = cfg.variant == Variant::v4like ? mdd::MotionEncoding::absolute : mdd::MotionEncoding::polarity;
    r.a1 = mdd::interval_attention(ctx, cfg.mdd, encoding, prev, curr);
    r.a2 = mdd::interval_attention(ctx, cfg.mdd, encoding, curr, next);
    r.input = mdd::build_input(t, prev, r.a1, curr, r.a2, next);
  } else {
    r.input = ops::concat(t, {prev, curr, next});
  }

  const Var features = backbone::backbone_forward(ctx, cfg.resolved_backbone(), r.input);
  r.draft = rstr::make_draft(ctx, features);
  r.draft_mdd = cfg.variant == Variant::v5 ? rstr::fuse_motion(ctx, r.draft, r.a1, r.a2) : r.draft;

  if (has_rstr(cfg.variant)) {
    r.base = rstr::stochastic_mask(t, r.draft_mdd, cfg.tsatt.mask_rate, opts.head_mode, opts.mask_seed);
    r.residual = rstr::tsatt_head(ctx, cfg.tsatt, r.base);
    r.heatmaps = rstr::refine(t, r.base, r.residual);
  } else {
    r.base = r.draft_mdd;
    r.heatmaps = ops::sigmoid(t, r.draft_mdd);
  }
  ctx.mode = saved;
  return r;
}

Tensor4 predict(const ModelState& state, const ModelConfig& cfg, const mdd::FrameTriplet& triplet) {
  Tape tape;
  ForwardContext ctx{tape, state, Mode::infer, {}};
  const auto r = forward(ctx, cfg, tape.input(triplet.prev), tape.input(triplet.curr), tape.input(triplet.next),
                         ForwardOptions{});
  return tape.value(r.heatmaps);
}

}  // namespace tracknet
