#include "tracknet/gradsuite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tracknet/ops.hpp"
#include "tracknet/random.hpp"
#include "tracknet/supervision.hpp"

namespace tracknet {

namespace {

double evaluate(const StateLossFn& fn, const ModelState& state) {
  Tape tape;
  const double v = tape.value(fn(tape, state)).item();
  if (!std::isfinite(v)) throw TensorError("finite_diff_check_param: non-finite loss");
  return v;
}

Tensor4 random_tensor(Shape s, Rng& rng, double lo, double hi) {
  Tensor4 t(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::vector<std::size_t> sample_coords(std::size_t size, std::size_t count, Rng& rng) {
  std::vector<std::size_t> all(size);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (size <= count) return all;
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.below(size - i)]);
  all.resize(count);
  return all;
}

void randomize(ModelState& state, const std::string& name, Rng& rng, double scale) {
  for (auto& v : state.value(name).data()) v = rng.uniform(-scale, scale);
}

// Three frames with a bright blob moving across a noisy background.
mdd::FrameTriplet moving_blob(int n, int h, int w, Rng& rng) {
  mdd::FrameTriplet t{Tensor4(Shape{n, 3, h, w}), Tensor4(Shape{n, 3, h, w}), Tensor4(Shape{n, 3, h, w})};
  Tensor4* frames[] = {&t.prev, &t.curr, &t.next};
  for (int k = 0; k < 3; ++k) {
    for (auto& v : frames[k]->data()) v = rng.uniform(0.1, 0.4);
    for (int b = 0; b < n; ++b) {
      const int cx = 3 + 3 * k + b;
      const int cy = h / 2;
      for (int c = 0; c < 3; ++c) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) frames[k]->at(b, c, cy + dy, cx + dx) = 0.9 - 0.1 * c;
        }
      }
    }
  }
  return t;
}

}  // namespace

double finite_diff_check_param(const StateLossFn& fn, const ModelState& state, const std::string& name, double step,
                               std::span<const std::size_t> coords) {
  if (step <= 0.0) throw TensorError("finite_diff_check_param: step must be positive");
  Tensor4 analytic(state.value(name).shape());
  {
    Tape tape;
    const Var loss = fn(tape, state);
    const Gradients g = tape.backward(loss);
    if (const auto it = g.params.find(name); it != g.params.end()) analytic = it->second;
  }
  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(analytic.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coords = all;
  }
  ModelState probe = state;
  Tensor4& p = probe.value(name);
  double worst = 0.0;
  for (const std::size_t i : coords) {
    const double x = p[i];
    p[i] = x + step;
    const double up = evaluate(fn, probe);
    p[i] = x - step;
    const double down = evaluate(fn, probe);
    p[i] = x;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

ModelConfig tiny_v5_config() {
  ModelConfig cfg;
  cfg.variant = Variant::v5;
  cfg.height = 8;
  cfg.width = 16;
  cfg.backbone.widths = {4, 6};
  cfg.tsatt.patch = 4;
  cfg.tsatt.dim = 8;
  cfg.tsatt.heads = 2;
  cfg.tsatt.mask_rate = 0.1;
  return cfg;
}

std::vector<GradCheckResult> check_module_gradients(std::uint64_t seed, double step, double network_step) {
  Rng rng(mix_seed(seed, 0x6A5));
  std::vector<GradCheckResult> out;

  // MDD attention mapping: d/d(alpha, beta) of a summed attention map.
  {
    const Tensor4 field = random_tensor({2, 3, 4, 4}, rng, 0.0, 1.0);
    const double alpha = rng.uniform(-1.5, 1.5);
    const double beta = rng.uniform(-1.0, 1.0);
    for (const bool wrt_alpha : {true, false}) {
      const ScalarFn fn = [&](Tape& tape, Var x) {
        const Var a = wrt_alpha ? x : tape.input(Tensor4::scalar(alpha));
        const Var b = wrt_alpha ? tape.input(Tensor4::scalar(beta)) : x;
        return ops::sum(tape, mdd::attention_map(tape, tape.input(field), a, b, 1e-6));
      };
      out.push_back({wrt_alpha ? "mdd/alpha" : "mdd/beta",
                     finite_diff_check(fn, Tensor4::scalar(wrt_alpha ? alpha : beta), step)});
    }
  }

  // WBCE loss with respect to the probability map, away from the clamp.
  {
    const Tensor4 p = random_tensor({1, 3, 5, 5}, rng, 0.02, 0.98);
    Tensor4 y(p.shape());
    for (auto& v : y.data()) v = rng.uniform() < 0.2 ? 1.0 : 0.0;
    const ScalarFn fn = [&](Tape& tape, Var x) { return ops::wbce(tape, x, tape.input(y)); };
    out.push_back({"supervision/wbce", finite_diff_check(fn, p, step)});
  }

  // End-to-end tiny V5: WBCE(H_final, Y) against parameters of every stage.
  {
    const ModelConfig cfg = tiny_v5_config();
    ModelState state = init_model(cfg, mix_seed(seed, 1));
    // Leave the cold-start no-op: give the fusion and residual head weights.
    randomize(state, "rstr.fusion.weight", rng, 0.5);
    randomize(state, "rstr.tsatt.head.weight", rng, 0.3);
    randomize(state, "rstr.tsatt.head.bias", rng, 0.3);
    const auto frames = moving_blob(2, cfg.height, cfg.width, rng);
    Tensor4 target(Shape{2, 3, cfg.height, cfg.width});
    for (int b = 0; b < 2; ++b) {
      for (int k = 0; k < 3; ++k) {
        const Tensor4 y = supervision::make_gt_heatmap({3.0 + 3 * k + b, cfg.height / 2.0, 1.5, true}, cfg.height,
                                                       cfg.width);
        for (int i = 0; i < cfg.height; ++i) {
          for (int j = 0; j < cfg.width; ++j) target.at(b, k, i, j) = y.at(0, 0, i, j);
        }
      }
    }
    const std::uint64_t mask_seed = mix_seed(seed, 2);
    const StateLossFn fn = [&](Tape& tape, const ModelState& s) {
      ForwardContext ctx{tape, s, Mode::train, {}};
      const auto r = forward(ctx, cfg, tape.input(frames.prev), tape.input(frames.curr), tape.input(frames.next),
                             ForwardOptions{Mode::train, Mode::train, mask_seed});
      return ops::wbce(tape, r.heatmaps, tape.input(target));
    };
    const std::vector<std::string> names = {
        "mdd.alpha",
        "mdd.beta",
        "backbone.enc0.conv0.weight",
        "backbone.enc1.conv1.bn.gamma",
        "backbone.dec0.conv0.weight",
        "rstr.draft.weight",
        "rstr.draft.bias",
        "rstr.fusion.weight",
        "rstr.tsatt.embed.weight",
        "rstr.tsatt.pos_spatial",
        "rstr.tsatt.pos_temporal",
        "rstr.tsatt.temporal0.q.weight",
        "rstr.tsatt.spatial0.ff1.weight",
        "rstr.tsatt.head.weight",
    };
    for (const auto& name : names) {
      const auto coords = sample_coords(state.value(name).size(), 4, rng);
      out.push_back({"v5/" + name, finite_diff_check_param(fn, state, name, network_step, coords)});
    }
  }
  return out;
}

}  // namespace tracknet
