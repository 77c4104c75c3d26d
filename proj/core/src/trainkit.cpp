#include "tracknet/trainkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tracknet/ops.hpp"
#include "tracknet/supervision.hpp"

namespace tracknet::train {

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  if (cfg.batch <= 0) throw std::invalid_argument("train: batch must be positive");
  if (cfg.epochs <= 0) throw std::invalid_argument("train: epochs must be positive");
  for (std::size_t i = 0; i < cfg.milestones.size(); ++i) {
    if (i > 0 && cfg.milestones[i] <= cfg.milestones[i - 1]) {
      throw std::invalid_argument("train: milestones must be strictly increasing");
    }
    if (cfg.milestones[i] < 0 || cfg.milestones[i] >= cfg.epochs) {
      throw std::invalid_argument("train: milestone " + std::to_string(cfg.milestones[i]) + " outside [0, " +
                                  std::to_string(cfg.epochs) + ")");
    }
  }
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw std::invalid_argument("train: gamma must be in (0, 1)");
  if (cfg.weight_decay < 0.0) throw std::invalid_argument("train: weight_decay must be nonnegative");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw std::invalid_argument("train: betas must be in [0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw std::invalid_argument("train: eps must be positive");
  if (cfg.grad_clip < 0.0) throw std::invalid_argument("train: grad_clip must be nonnegative");
  if (cfg.window_stride <= 0) throw std::invalid_argument("train: window_stride must be positive");
  if (!(cfg.gt_radius > 0.0)) throw std::invalid_argument("train: gt_radius must be positive");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  if (epoch < 0 || epoch >= cfg.epochs) {
    throw std::out_of_range("lr_at_epoch: epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(cfg.epochs) + ")");
  }
  const auto passed = std::count_if(cfg.milestones.begin(), cfg.milestones.end(), [&](int m) { return m <= epoch; });
  return cfg.lr * std::pow(cfg.gamma, static_cast<double>(passed));
}

void adamw_step(ModelState& state, const std::map<std::string, Tensor4>& grads, double lr, const TrainConfig& cfg) {
  std::size_t trainable = 0;
  for (const auto& e : state.entries()) {
    if (!e.trainable()) continue;
    ++trainable;
    const auto it = grads.find(e.name);
    if (it == grads.end()) throw std::invalid_argument("adamw_step: missing gradient for '" + e.name + "'");
    if (!(it->second.shape() == e.value.shape())) {
      throw std::invalid_argument("adamw_step: gradient shape " + it->second.shape().str() + " for '" + e.name +
                                  "' expected " + e.value.shape().str());
    }
    if (!it->second.all_finite()) throw std::runtime_error("adamw_step: non-finite gradient for '" + e.name + "'");
  }
  if (grads.size() != trainable) {
    for (const auto& [name, g] : grads) {
      if (!state.contains(name) || !state.entry(name).trainable()) {
        throw std::invalid_argument("adamw_step: gradient for unknown parameter '" + name + "'");
      }
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& e : state.entries()) {
    if (!e.trainable()) continue;
    const auto g = grads.at(e.name).data();
    auto w = e.value.data();
    auto m = e.m.data();
    auto v = e.v.data();
    const double wd = e.group == ParamGroup::decay ? cfg.weight_decay : 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      w[i] -= lr * (mh / (std::sqrt(vh) + cfg.eps) + wd * w[i]);
    }
  }
}

double clip_global_norm(std::map<std::string, Tensor4>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (const double x : g.data()) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, g] : grads) {
      for (double& x : g.data()) x *= s;
    }
  }
  return norm;
}

Batch make_batch(const std::vector<synth::Sequence>& data, const std::vector<synth::Window>& windows,
                 double gt_radius) {
  if (windows.empty()) throw std::invalid_argument("make_batch: no windows");
  const Shape fs = data.at(windows[0].seq).frames.at(windows[0].start).image.shape();
  const int n = static_cast<int>(windows.size());
  Batch b;
  b.prev = Tensor4(Shape{n, 3, fs.h, fs.w});
  b.curr = Tensor4(Shape{n, 3, fs.h, fs.w});
  b.next = Tensor4(Shape{n, 3, fs.h, fs.w});
  b.target = Tensor4(Shape{n, 3, fs.h, fs.w});
  const std::size_t frame_size = fs.size();
  const std::size_t plane = static_cast<std::size_t>(fs.h) * fs.w;
  Tensor4* slots[] = {&b.prev, &b.curr, &b.next};
  for (int i = 0; i < n; ++i) {
    const auto& seq = data.at(windows[i].seq);
    for (int k = 0; k < 3; ++k) {
      const auto& f = seq.frames.at(windows[i].start + k);
      if (!(f.image.shape() == fs)) throw TensorError("make_batch: frame shape " + f.image.shape().str() + " differs from " + fs.str());
      std::copy(f.image.data().begin(), f.image.data().end(), slots[k]->data().begin() + i * frame_size);
      const Tensor4 y = supervision::make_gt_heatmap({f.x, f.y, gt_radius, f.visible}, fs.h, fs.w);
      std::copy(y.data().begin(), y.data().end(), b.target.data().begin() + (i * 3 + k) * plane);
    }
  }
  return b;
}

std::vector<synth::Window> epoch_windows(const std::vector<synth::Sequence>& data, const TrainConfig& cfg, int epoch) {
  std::vector<synth::Window> out;
  for (const auto& w : synth::training_windows(data)) {
    if ((w.start - epoch % cfg.window_stride + cfg.window_stride) % cfg.window_stride == 0) out.push_back(w);
  }
  Rng rng(mix_seed(cfg.seed, 0x5EED0000ULL + static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
  return out;
}

StepResult train_step(ModelState& state, const ModelConfig& model, const Batch& batch, std::uint64_t mask_seed) {
  Tape tape;
  ForwardContext ctx{tape, state, Mode::train, {}};
  const ForwardOptions opts{Mode::train, Mode::train, mask_seed};
  const auto r = forward(ctx, model, tape.input(batch.prev), tape.input(batch.curr), tape.input(batch.next), opts);
  const Var loss = ops::wbce(tape, r.heatmaps, tape.input(batch.target));
  StepResult out;
  out.loss = tape.value(loss).item();
  out.grads = tape.backward(loss).params;
  commit_running_stats(state, ctx);
  return out;
}

FitResult fit(const ModelConfig& model, ModelState init, const std::vector<synth::Sequence>& data,
              const TrainConfig& cfg, const FitHooks& hooks) {
  validate(cfg);
  validate(model);
  if (data.empty()) throw std::invalid_argument("fit: empty dataset");
  FitResult res;
  res.state = std::move(init);
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    const auto windows = epoch_windows(data, cfg, epoch);
    if (windows.empty()) throw std::invalid_argument("fit: no training windows (sequences need >= 3 frames)");
    double sum = 0.0;
    int steps = 0;
    for (std::size_t i = 0; i < windows.size(); i += cfg.batch) {
      const std::size_t end = std::min(windows.size(), i + cfg.batch);
      const Batch batch = make_batch(data, {windows.begin() + i, windows.begin() + end}, cfg.gt_radius);
      ModelState backup = res.state;
      try {
        StepResult s = train_step(res.state, model, batch, mix_seed(cfg.seed, 0x3A5C0000ULL + step));
        if (!std::isfinite(s.loss)) throw std::runtime_error("non-finite loss");
        if (cfg.grad_clip > 0.0) clip_global_norm(s.grads, cfg.grad_clip);
        adamw_step(res.state, s.grads, lr, cfg);
        const StepRecord rec{epoch, step, lr, s.loss};
        res.log.push_back(rec);
        if (hooks.on_step) hooks.on_step(rec);
        sum += s.loss;
        ++steps;
      } catch (const std::exception& e) {
        res.state = std::move(backup);
        res.diverged = true;
        res.message = "diverged at epoch " + std::to_string(epoch) + " step " + std::to_string(step) + ": " + e.what();
        return res;
      }
      ++step;
    }
    res.epoch_loss.push_back(sum / steps);
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, res.state);
  }
  return res;
}

}  // namespace tracknet::train
