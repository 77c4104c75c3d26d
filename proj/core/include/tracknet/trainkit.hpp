#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tracknet/model.hpp"
#include "tracknet/synthgen.hpp"

namespace tracknet::train {

struct TrainConfig {
  double lr = 1e-4;
  int batch = 2;
  int epochs = 30;
  std::vector<int> milestones{20, 25};
  double gamma = 0.1;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global-norm clip; 0 disables.
  double grad_clip = 0.0;
  /// Windows used per epoch: those whose start is congruent to the epoch
  /// index modulo this stride. 1 uses every overlapping window.
  int window_stride = 1;
  double gt_radius = 3.0;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// base * gamma^(number of milestones <= epoch). Throws outside [0, epochs).
double lr_at_epoch(const TrainConfig& cfg, int epoch);

/// One decoupled-weight-decay Adam update of every trainable entry.
/// `grads` must hold exactly the trainable parameters; a non-finite gradient
/// throws and names the parameter. Increments state.step.
void adamw_step(ModelState& state, const std::map<std::string, Tensor4>& grads, double lr, const TrainConfig& cfg);

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::map<std::string, Tensor4>& grads, double max_norm);

/// Stacked frames and targets for a list of windows, each (B, 3, H, W).
struct Batch {
  Tensor4 prev;
  Tensor4 curr;
  Tensor4 next;
  Tensor4 target;
};

Batch make_batch(const std::vector<synth::Sequence>& data, const std::vector<synth::Window>& windows,
                 double gt_radius);

/// Windows of one epoch in training order.
std::vector<synth::Window> epoch_windows(const std::vector<synth::Sequence>& data, const TrainConfig& cfg, int epoch);

struct StepRecord {
  int epoch = 0;
  std::uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct StepResult {
  double loss = 0.0;
  std::map<std::string, Tensor4> grads;
};

/// Forward + backward on one batch in train mode. Batch-norm running
/// statistics are committed to `state`; parameters are not updated.
StepResult train_step(ModelState& state, const ModelConfig& model, const Batch& batch, std::uint64_t mask_seed);

struct FitResult {
  ModelState state;
  std::vector<StepRecord> log;
  std::vector<double> epoch_loss;  // mean step loss per completed epoch
  bool diverged = false;
  std::string message;
};

struct FitHooks {
  /// Called after each completed epoch with the current state.
  std::function<void(int epoch, const ModelState&)> on_epoch_end;
  std::function<void(const StepRecord&)> on_step;
};

/// Trains from `init` for cfg.epochs. Deterministic given cfg.seed. A
/// non-finite loss or gradient stops training and returns the state from
/// before the failing step with diverged = true.
FitResult fit(const ModelConfig& model, ModelState init, const std::vector<synth::Sequence>& data,
              const TrainConfig& cfg, const FitHooks& hooks = {});

}  // namespace tracknet::train
