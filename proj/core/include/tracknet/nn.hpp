#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tracknet/model_state.hpp"
#include "tracknet/random.hpp"
#include "tracknet/tape.hpp"

namespace tracknet {

/// One forward pass: the tape it records on, the weights it reads and the
/// mode. Batch-norm layers queue their batch statistics here in train mode;
/// commit_running_stats() folds them into the running buffers.
struct ForwardContext {
  Tape& tape;
  const ModelState& state;
  Mode mode = Mode::infer;
  std::vector<std::pair<std::string, Var>> pending_bn;

  Var param(const std::string& name) { return tape.parameter(name, state.value(name)); }
};

inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kBatchNormEps = 1e-5;

namespace nn {

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); bias likewise.
void add_conv2d(ModelState& s, const std::string& name, int cin, int cout, int kernel, bool bias, Rng& rng);
Var conv2d(ForwardContext& ctx, const std::string& name, Var x, int padding);

void add_batch_norm(ModelState& s, const std::string& name, int channels);
Var batch_norm(ForwardContext& ctx, const std::string& name, Var x);

/// Token-wise affine map (1,1,din,dout) + bias (1,1,1,dout).
void add_linear(ModelState& s, const std::string& name, int din, int dout, Rng& rng, bool zero_init = false);
Var linear(ForwardContext& ctx, const std::string& name, Var x);

void add_layer_norm(ModelState& s, const std::string& name, int dim);
Var layer_norm(ForwardContext& ctx, const std::string& name, Var x);

}  // namespace nn

/// Applies queued batch-norm statistics (momentum 0.1, unbiased variance).
void commit_running_stats(ModelState& state, const ForwardContext& ctx);

}  // namespace tracknet
