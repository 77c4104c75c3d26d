#include "tracknet/mdd.hpp"

#include <cmath>

#include "tracknet/ops.hpp"

namespace tracknet::mdd {

void FrameTriplet::validate() const {
  const Shape& s = curr.shape();
  if (s.c != 3) throw TensorError("FrameTriplet: frames must have 3 channels, got " + s.str());
  if (!(prev.shape() == s) || !(next.shape() == s)) {
    throw TensorError("FrameTriplet: frame shapes differ: " + prev.shape().str() + ", " + s.str() + ", " +
                      next.shape().str());
  }
  for (const Tensor4* f : {&prev, &curr, &next}) {
    for (const double v : f->data()) {
      if (!(v >= 0.0 && v <= 1.0)) throw TensorError("FrameTriplet: pixel value outside [0, 1]");
    }
  }
}

Tensor4 raw_difference(const Tensor4& earlier, const Tensor4& later) {
  if (!(earlier.shape() == later.shape())) {
    throw TensorError("raw_difference: shape mismatch " + earlier.shape().str() + " vs " + later.shape().str());
  }
  Tensor4 d(later.shape());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = later[i] - earlier[i];
  return d;
}

PolarityFields polarity_decompose(const Tensor4& delta) {
  if (!delta.all_finite()) throw TensorError("polarity_decompose: non-finite input");
  PolarityFields f{Tensor4(delta.shape()), Tensor4(delta.shape())};
  for (std::size_t i = 0; i < delta.size(); ++i) {
    f.plus[i] = delta[i] > 0.0 ? delta[i] : 0.0;
    f.minus[i] = delta[i] < 0.0 ? -delta[i] : 0.0;
  }
  return f;
}

double slope(double alpha, double eps) { return 5.0 / (0.45 * std::abs(std::tanh(alpha)) + eps); }
double center(double beta) { return 0.6 * std::tanh(beta); }

Var attention_map(Tape& tape, Var field, Var alpha, Var beta, double eps) {
  const Var k = ops::scale(tape, ops::reciprocal(tape, ops::affine(tape, ops::abs(tape, ops::tanh(tape, alpha)), 0.45, eps)), 5.0);
  const Var m = ops::scale(tape, ops::tanh(tape, beta), 0.6);
  const Var x = ops::abs(tape, ops::channel_mean(tape, field));
  return ops::sigmoid(tape, ops::multiply(tape, ops::subtract(tape, x, m), k));
}

Tensor4 attention_map(const Tensor4& x, const AttentionParams& params) {
  if (params.eps <= 0.0) throw TensorError("attention_map: eps must be positive");
  Tape tape;
  const Var out = attention_map(tape, tape.input(x), tape.input(Tensor4::scalar(params.alpha)),
                                tape.input(Tensor4::scalar(params.beta)), params.eps);
  return tape.value(out);
}

Var build_input(Tape& tape, Var prev, Var a1, Var curr, Var a2, Var next) {
  const Shape& s = tape.value(curr).shape();
  for (const Var v : {prev, a1, a2, next}) {
    const Shape& q = tape.value(v).shape();
    if (q.n != s.n || q.h != s.h || q.w != s.w) {
      throw TensorError("build_input: spatial shape " + q.str() + " does not match " + s.str());
    }
  }
  return ops::concat(tape, {prev, a1, curr, a2, next});
}

Tensor4 build_input(const FrameTriplet& triplet, const Tensor4& a1, const Tensor4& a2) {
  if (a1.shape().c != 2 || a2.shape().c != 2) {
    throw TensorError("build_input: attention stacks must have 2 channels, got " + a1.shape().str() + " and " +
                      a2.shape().str());
  }
  Tape tape;
  const Var out = build_input(tape, tape.input(triplet.prev), tape.input(a1), tape.input(triplet.curr),
                              tape.input(a2), tape.input(triplet.next));
  return tape.value(out);
}

void add_parameters(ModelState& state, const MddConfig& cfg) {
  if (cfg.per_polarity) {
    for (const char* pol : {"plus", "minus"}) {
      state.add(std::string("mdd.") + pol + ".alpha", Tensor4::scalar(cfg.alpha_init), ParamGroup::no_decay);
      state.add(std::string("mdd.") + pol + ".beta", Tensor4::scalar(cfg.beta_init), ParamGroup::no_decay);
    }
  } else {
    state.add("mdd.alpha", Tensor4::scalar(cfg.alpha_init), ParamGroup::no_decay);
    state.add("mdd.beta", Tensor4::scalar(cfg.beta_init), ParamGroup::no_decay);
  }
}

std::string alpha_name(const MddConfig& cfg, bool plus) {
  if (!cfg.per_polarity) return "mdd.alpha";
  return plus ? "mdd.plus.alpha" : "mdd.minus.alpha";
}

std::string beta_name(const MddConfig& cfg, bool plus) {
  if (!cfg.per_polarity) return "mdd.beta";
  return plus ? "mdd.plus.beta" : "mdd.minus.beta";
}

Var interval_attention(ForwardContext& ctx, const MddConfig& cfg, MotionEncoding encoding, Var earlier, Var later) {
  Tape& t = ctx.tape;
  const Var delta = ops::subtract(t, later, earlier);
  const Var plus = ops::relu(t, delta);
  const Var minus = ops::relu(t, ops::negate(t, delta));
  if (encoding == MotionEncoding::absolute) {
    const Var magnitude = ops::add(t, plus, minus);
    const Var a = attention_map(t, magnitude, ctx.param(alpha_name(cfg, true)), ctx.param(beta_name(cfg, true)), cfg.eps);
    return ops::concat(t, {a, a});
  }
  const Var ap = attention_map(t, plus, ctx.param(alpha_name(cfg, true)), ctx.param(beta_name(cfg, true)), cfg.eps);
  const Var am = attention_map(t, minus, ctx.param(alpha_name(cfg, false)), ctx.param(beta_name(cfg, false)), cfg.eps);
  return ops::concat(t, {ap, am});
}

}  // namespace tracknet::mdd
