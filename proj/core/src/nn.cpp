#include "tracknet/nn.hpp"

#include <cmath>

#include "tracknet/ops.hpp"

namespace tracknet {
namespace nn {

void add_conv2d(ModelState& s, const std::string& name, int cin, int cout, int kernel, bool bias, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cin * kernel * kernel));
  Tensor4 w(Shape{cout, cin, kernel, kernel});
  for (auto& v : w.data()) v = rng.uniform(-bound, bound);
  s.add(name + ".weight", std::move(w), ParamGroup::decay);
  if (bias) {
    Tensor4 b(Shape{1, cout, 1, 1});
    for (auto& v : b.data()) v = rng.uniform(-bound, bound);
    s.add(name + ".bias", std::move(b), ParamGroup::no_decay);
  }
}

Var conv2d(ForwardContext& ctx, const std::string& name, Var x, int padding) {
  const Var w = ctx.param(name + ".weight");
  const std::string bias = name + ".bias";
  const Var b = ctx.state.contains(bias) ? ctx.param(bias) : Var{};
  return ops::conv2d(ctx.tape, x, w, b, 1, padding);
}

void add_batch_norm(ModelState& s, const std::string& name, int channels) {
  const Shape cs{1, channels, 1, 1};
  s.add(name + ".gamma", Tensor4(cs, 1.0), ParamGroup::no_decay);
  s.add(name + ".beta", Tensor4(cs, 0.0), ParamGroup::no_decay);
  s.add(name + ".running_mean", Tensor4(cs, 0.0), ParamGroup::buffer);
  s.add(name + ".running_var", Tensor4(cs, 1.0), ParamGroup::buffer);
}

Var batch_norm(ForwardContext& ctx, const std::string& name, Var x) {
  const Var mean = ctx.tape.input(ctx.state.value(name + ".running_mean"));
  const Var var = ctx.tape.input(ctx.state.value(name + ".running_var"));
  const Var out = ops::batch_norm2d(ctx.tape, x, ctx.param(name + ".gamma"), ctx.param(name + ".beta"), mean, var,
                                    ctx.mode, kBatchNormEps);
  if (ctx.mode == Mode::train) ctx.pending_bn.emplace_back(name, out);
  return out;
}

void add_linear(ModelState& s, const std::string& name, int din, int dout, Rng& rng, bool zero_init) {
  const double bound = zero_init ? 0.0 : 1.0 / std::sqrt(static_cast<double>(din));
  Tensor4 w(Shape{1, 1, din, dout});
  Tensor4 b(Shape{1, 1, 1, dout});
  if (!zero_init) {
    for (auto& v : w.data()) v = rng.uniform(-bound, bound);
    for (auto& v : b.data()) v = rng.uniform(-bound, bound);
  }
  s.add(name + ".weight", std::move(w), ParamGroup::decay);
  s.add(name + ".bias", std::move(b), ParamGroup::no_decay);
}

Var linear(ForwardContext& ctx, const std::string& name, Var x) {
  return ops::linear(ctx.tape, x, ctx.param(name + ".weight"), ctx.param(name + ".bias"));
}

void add_layer_norm(ModelState& s, const std::string& name, int dim) {
  s.add(name + ".gamma", Tensor4(Shape{1, 1, 1, dim}, 1.0), ParamGroup::no_decay);
  s.add(name + ".beta", Tensor4(Shape{1, 1, 1, dim}, 0.0), ParamGroup::no_decay);
}

Var layer_norm(ForwardContext& ctx, const std::string& name, Var x) {
  return ops::layer_norm(ctx.tape, x, ctx.param(name + ".gamma"), ctx.param(name + ".beta"));
}

}  // namespace nn

void commit_running_stats(ModelState& state, const ForwardContext& ctx) {
  for (const auto& [name, node] : ctx.pending_bn) {
    const auto& aux = ctx.tape.aux(node);
    Tensor4& mean = state.value(name + ".running_mean");
    Tensor4& var = state.value(name + ".running_var");
    for (std::size_t c = 0; c < mean.size(); ++c) {
      mean[c] = (1.0 - kBatchNormMomentum) * mean[c] + kBatchNormMomentum * aux[0][c];
      var[c] = (1.0 - kBatchNormMomentum) * var[c] + kBatchNormMomentum * aux[2][c];
    }
  }
}

}  // namespace tracknet
