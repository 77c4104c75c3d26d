#include "tracknet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tracknet/ops.hpp"
#include "tracknet/random.hpp"

namespace tracknet {
namespace {

double evaluate(const ScalarFn& fn, const Tensor4& point) {
  Tape tape;
  const Var x = tape.variable(point);
  const double v = tape.value(fn(tape, x)).item();
  if (!std::isfinite(v)) throw TensorError("finite_diff_check: non-finite function value");
  return v;
}

Tensor4 random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor4 t(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so kinks at 0 are never crossed by a probe.
Tensor4 away_from_zero(Shape s, Rng& rng) {
  Tensor4 t(s);
  for (auto& v : t.data()) {
    const double mag = rng.uniform(0.1, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

// Random linear functional of the output: sum(out * weights).
Var project(Tape& tape, Var out, std::uint64_t seed) {
  Rng rng(seed);
  const Var w = tape.input(random_tensor(tape.value(out).shape(), rng, -1.0, 1.0));
  return ops::sum(tape, ops::multiply(tape, out, w));
}

struct Case {
  std::string name;
  PrimitiveKind kind;
  std::vector<Tensor4> inputs;
  OpParams params;
  std::vector<std::size_t> constant;  // input indices never checked
};

}  // namespace

double finite_diff_check(const ScalarFn& fn, const Tensor4& point, double step, std::span<const std::size_t> coords) {
  if (step <= 0.0) throw TensorError("finite_diff_check: step must be positive");
  Tape tape;
  const Var x = tape.variable(point);
  const Var loss = fn(tape, x);
  const Gradients grads = tape.backward(loss);
  Tensor4 analytic(point.shape());
  if (const auto it = grads.leaves.find(x.id); it != grads.leaves.end()) analytic = it->second;

  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(point.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coords = all;
  }
  double worst = 0.0;
  Tensor4 probe = point;
  for (const std::size_t i : coords) {
    if (i >= point.size()) throw TensorError("finite_diff_check: coordinate out of range");
    probe[i] = point[i] + step;
    const double up = evaluate(fn, probe);
    probe[i] = point[i] - step;
    const double down = evaluate(fn, probe);
    probe[i] = point[i];
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

std::vector<GradCheckResult> check_primitive_gradients(std::uint64_t seed, double step) {
  Rng rng(seed);
  std::vector<Case> cases;
  auto r = [&](Shape s) { return random_tensor(s, rng); };

  {
    OpParams p;
    p.padding = 1;
    cases.push_back({"conv2d", PrimitiveKind::conv2d, {r({2, 3, 5, 5}), r({4, 3, 3, 3}), r({1, 4, 1, 1})}, p, {}});
    OpParams q;
    q.stride = 2;
    q.padding = 1;
    cases.push_back({"conv2d/stride2", PrimitiveKind::conv2d, {r({1, 2, 6, 6}), r({3, 2, 3, 3})}, q, {}});
    cases.push_back({"conv2d/1x1", PrimitiveKind::conv2d, {r({2, 4, 3, 3}), r({3, 4, 1, 1}), r({1, 3, 1, 1})}, {}, {}});
  }
  cases.push_back({"relu", PrimitiveKind::relu, {away_from_zero({2, 3, 3, 3}, rng)}, {}, {}});
  cases.push_back({"sigmoid", PrimitiveKind::sigmoid, {random_tensor({2, 3, 3, 3}, rng, -3, 3)}, {}, {}});
  cases.push_back({"tanh", PrimitiveKind::tanh, {random_tensor({2, 3, 3, 3}, rng, -2, 2)}, {}, {}});
  cases.push_back({"add", PrimitiveKind::add, {r({2, 3, 4, 5}), r({1, 3, 1, 5})}, {}, {}});
  cases.push_back({"subtract", PrimitiveKind::subtract, {r({2, 3, 4, 5}), r({2, 1, 4, 1})}, {}, {}});
  cases.push_back({"multiply", PrimitiveKind::multiply, {r({2, 3, 4, 5}), r({1, 1, 1, 1})}, {}, {}});
  cases.push_back({"multiply/same", PrimitiveKind::multiply, {r({2, 3, 2, 2}), r({2, 3, 2, 2})}, {}, {}});
  cases.push_back({"matmul", PrimitiveKind::matmul, {r({2, 2, 3, 4}), r({2, 2, 4, 5})}, {}, {}});
  {
    OpParams p;
    p.transpose_rhs = true;
    cases.push_back({"matmul/transposed", PrimitiveKind::matmul, {r({2, 2, 3, 4}), r({2, 2, 5, 4})}, p, {}});
  }
  cases.push_back({"layer_norm", PrimitiveKind::layer_norm,
                   {r({1, 2, 3, 6}), random_tensor({1, 1, 1, 6}, rng, 0.5, 1.5), r({1, 1, 1, 6})}, {}, {}});
  cases.push_back({"softmax", PrimitiveKind::softmax, {random_tensor({1, 2, 3, 5}, rng, -2, 2)}, {}, {}});
  cases.push_back({"concat", PrimitiveKind::concat, {r({2, 2, 3, 3}), r({2, 1, 3, 3}), r({2, 3, 3, 3})}, {}, {}});
  {
    OpParams p;
    p.rate = 0.3;
    p.mode = Mode::train;
    p.seed = seed + 17;
    cases.push_back({"dropout", PrimitiveKind::dropout, {r({2, 3, 4, 4})}, p, {}});
  }
  {
    OpParams p;
    p.factor = 2;
    cases.push_back({"pixel_shuffle", PrimitiveKind::pixel_shuffle, {r({1, 8, 3, 3})}, p, {}});
  }
  {
    // distinct values spaced 0.05 apart: no probe can change the arg-max
    Tensor4 x(Shape{1, 2, 4, 6});
    std::vector<double> vals(x.size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.05 * static_cast<double>(i) - 1.0;
    for (std::size_t i = vals.size() - 1; i > 0; --i) std::swap(vals[i], vals[rng.below(i + 1)]);
    std::copy(vals.begin(), vals.end(), x.data().begin());
    cases.push_back({"max_pool2d", PrimitiveKind::max_pool2d, {x}, {}, {}});
  }
  cases.push_back({"nearest_upsample", PrimitiveKind::nearest_upsample, {r({1, 2, 3, 3})}, {}, {}});
  {
    OpParams train;
    train.mode = Mode::train;
    const Shape cs{1, 3, 1, 1};
    cases.push_back({"batch_norm2d/train", PrimitiveKind::batch_norm2d,
                     {r({2, 3, 3, 3}), random_tensor(cs, rng, 0.5, 1.5), r(cs), r(cs), random_tensor(cs, rng, 0.5, 2)},
                     train, {3, 4}});
    OpParams infer;
    infer.mode = Mode::infer;
    cases.push_back({"batch_norm2d/infer", PrimitiveKind::batch_norm2d,
                     {r({2, 3, 3, 3}), random_tensor(cs, rng, 0.5, 1.5), r(cs), r(cs), random_tensor(cs, rng, 0.5, 2)},
                     infer, {3, 4}});
  }
  cases.push_back({"linear", PrimitiveKind::linear, {r({1, 2, 3, 4}), r({1, 1, 4, 5}), r({1, 1, 1, 5})}, {}, {}});
  {
    OpParams p;
    p.factor = 2;
    cases.push_back({"patchify", PrimitiveKind::patchify, {r({1, 2, 4, 6})}, p, {}});
    p.out_h = 4;
    p.out_w = 6;
    cases.push_back({"unpatchify", PrimitiveKind::unpatchify, {r({1, 2, 6, 4})}, p, {}});
  }
  cases.push_back({"abs", PrimitiveKind::abs, {away_from_zero({2, 2, 3, 3}, rng)}, {}, {}});
  {
    OpParams p;
    p.scale = 1.7;
    p.offset = 0.3;
    cases.push_back({"affine", PrimitiveKind::affine, {r({2, 2, 3, 3})}, p, {}});
  }
  {
    Tensor4 x(Shape{2, 2, 3, 3});
    for (auto& v : x.data()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 2.0);
    cases.push_back({"reciprocal", PrimitiveKind::reciprocal, {x}, {}, {}});
  }
  cases.push_back({"channel_mean", PrimitiveKind::channel_mean, {r({2, 3, 3, 4})}, {}, {}});
  {
    OpParams p;
    p.start = 1;
    p.count = 2;
    cases.push_back({"slice_channels", PrimitiveKind::slice_channels, {r({2, 4, 3, 3})}, p, {}});
  }
  {
    OpParams p;
    p.target = Shape{3, 2, 4, 1};
    cases.push_back({"reshape", PrimitiveKind::reshape, {r({1, 2, 3, 4})}, p, {}});
  }
  {
    OpParams p;
    p.perm = {0, 2, 3, 1};
    cases.push_back({"permute", PrimitiveKind::permute, {r({2, 3, 4, 5})}, p, {}});
  }
  cases.push_back({"sum", PrimitiveKind::sum, {r({2, 3, 3, 3})}, {}, {}});
  {
    Tensor4 p = random_tensor({1, 3, 4, 4}, rng, 0.05, 0.95);
    Tensor4 y(p.shape());
    for (auto& v : y.data()) v = rng.uniform() < 0.3 ? 1.0 : 0.0;
    cases.push_back({"wbce", PrimitiveKind::wbce, {p, y}, {}, {1}});
  }

  std::vector<GradCheckResult> results;
  std::uint64_t proj_seed = mix_seed(seed, 99);
  for (const auto& c : cases) {
    for (std::size_t which = 0; which < c.inputs.size(); ++which) {
      if (std::find(c.constant.begin(), c.constant.end(), which) != c.constant.end()) continue;
      const std::uint64_t ps = proj_seed++;
      const ScalarFn fn = [&c, which, ps](Tape& tape, Var x) {
        std::vector<Var> vars;
        for (std::size_t i = 0; i < c.inputs.size(); ++i) {
          vars.push_back(i == which ? x : tape.input(c.inputs[i]));
        }
        const Var out = tape.apply(c.kind, vars, c.params);
        return tape.value(out).size() == 1 ? out : project(tape, out, ps);
      };
      results.push_back({c.name + "[" + std::to_string(which) + "]",
                         finite_diff_check(fn, c.inputs[which], step)});
    }
  }
  return results;
}

}  // namespace tracknet
