#pragma once

#include <vector>

#include "tracknet/tape.hpp"

// Thin call-site wrappers over Tape::apply.
namespace tracknet::ops {

inline Var conv2d(Tape& t, Var x, Var w, Var b, int stride = 1, int padding = 0) {
  OpParams p;
  p.stride = stride;
  p.padding = padding;
  return b.valid() ? t.apply(PrimitiveKind::conv2d, {x, w, b}, p) : t.apply(PrimitiveKind::conv2d, {x, w}, p);
}
inline Var relu(Tape& t, Var x) { return t.apply(PrimitiveKind::relu, {x}); }
inline Var sigmoid(Tape& t, Var x) { return t.apply(PrimitiveKind::sigmoid, {x}); }
inline Var tanh(Tape& t, Var x) { return t.apply(PrimitiveKind::tanh, {x}); }
inline Var abs(Tape& t, Var x) { return t.apply(PrimitiveKind::abs, {x}); }
inline Var reciprocal(Tape& t, Var x) { return t.apply(PrimitiveKind::reciprocal, {x}); }
inline Var add(Tape& t, Var a, Var b) { return t.apply(PrimitiveKind::add, {a, b}); }
inline Var subtract(Tape& t, Var a, Var b) { return t.apply(PrimitiveKind::subtract, {a, b}); }
inline Var multiply(Tape& t, Var a, Var b) { return t.apply(PrimitiveKind::multiply, {a, b}); }
inline Var affine(Tape& t, Var x, double scale, double offset) {
  OpParams p;
  p.scale = scale;
  p.offset = offset;
  return t.apply(PrimitiveKind::affine, {x}, p);
}
inline Var scale(Tape& t, Var x, double s) { return affine(t, x, s, 0.0); }
inline Var negate(Tape& t, Var x) { return affine(t, x, -1.0, 0.0); }

inline Var matmul(Tape& t, Var a, Var b, bool transpose_rhs = false) {
  OpParams p;
  p.transpose_rhs = transpose_rhs;
  return t.apply(PrimitiveKind::matmul, {a, b}, p);
}
inline Var linear(Tape& t, Var x, Var w, Var b) {
  return b.valid() ? t.apply(PrimitiveKind::linear, {x, w, b}) : t.apply(PrimitiveKind::linear, {x, w});
}
inline Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps = 1e-5) {
  OpParams p;
  p.eps = eps;
  return t.apply(PrimitiveKind::layer_norm, {x, gamma, beta}, p);
}
inline Var softmax(Tape& t, Var x) { return t.apply(PrimitiveKind::softmax, {x}); }
inline Var concat(Tape& t, const std::vector<Var>& xs) { return t.apply(PrimitiveKind::concat, xs); }
inline Var slice_channels(Tape& t, Var x, int start, int count) {
  OpParams p;
  p.start = start;
  p.count = count;
  return t.apply(PrimitiveKind::slice_channels, {x}, p);
}
inline Var channel_mean(Tape& t, Var x) { return t.apply(PrimitiveKind::channel_mean, {x}); }
inline Var dropout(Tape& t, Var x, double rate, Mode mode, std::uint64_t seed) {
  OpParams p;
  p.rate = rate;
  p.mode = mode;
  p.seed = seed;
  return t.apply(PrimitiveKind::dropout, {x}, p);
}
inline Var pixel_shuffle(Tape& t, Var x, int factor) {
  OpParams p;
  p.factor = factor;
  return t.apply(PrimitiveKind::pixel_shuffle, {x}, p);
}
inline Var max_pool2d(Tape& t, Var x) { return t.apply(PrimitiveKind::max_pool2d, {x}); }
inline Var nearest_upsample(Tape& t, Var x) { return t.apply(PrimitiveKind::nearest_upsample, {x}); }
inline Var batch_norm2d(Tape& t, Var x, Var gamma, Var beta, Var running_mean, Var running_var, Mode mode,
                        double eps = 1e-5) {
  OpParams p;
  p.mode = mode;
  p.eps = eps;
  return t.apply(PrimitiveKind::batch_norm2d, {x, gamma, beta, running_mean, running_var}, p);
}
inline Var patchify(Tape& t, Var x, int patch) {
  OpParams p;
  p.factor = patch;
  return t.apply(PrimitiveKind::patchify, {x}, p);
}
inline Var unpatchify(Tape& t, Var x, int patch, int height, int width) {
  OpParams p;
  p.factor = patch;
  p.out_h = height;
  p.out_w = width;
  return t.apply(PrimitiveKind::unpatchify, {x}, p);
}
inline Var reshape(Tape& t, Var x, Shape target) {
  OpParams p;
  p.target = target;
  return t.apply(PrimitiveKind::reshape, {x}, p);
}
inline Var permute(Tape& t, Var x, std::array<int, 4> perm) {
  OpParams p;
  p.perm = perm;
  return t.apply(PrimitiveKind::permute, {x}, p);
}
inline Var sum(Tape& t, Var x) { return t.apply(PrimitiveKind::sum, {x}); }
inline Var wbce(Tape& t, Var p, Var y) { return t.apply(PrimitiveKind::wbce, {p, y}); }

}  // namespace tracknet::ops
