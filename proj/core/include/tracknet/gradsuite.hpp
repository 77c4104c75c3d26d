#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tracknet/gradcheck.hpp"
#include "tracknet/model.hpp"

namespace tracknet {

/// Builds a scalar loss from a model state; parameters are bound through a
/// ForwardContext over `state`.
using StateLossFn = std::function<Var(Tape& tape, const ModelState& state)>;

/// finite_diff_check for a named parameter of `state`: the analytic
/// gradient comes from the tape, the numeric one from re-running `fn` on
/// perturbed copies of the parameter.
double finite_diff_check_param(const StateLossFn& fn, const ModelState& state, const std::string& name,
                               double step = 1e-4, std::span<const std::size_t> coords = {});

/// Module-level checks: MDD alpha/beta and the WBCE loss at `step`, then
/// parameters of every stage of an end-to-end tiny V5 model at
/// `network_step`. The network probe is smaller because a 1e-4 move of a
/// weight shifts thousands of ReLU/max-pool inputs, some of which cross a
/// kink and corrupt the central difference.
std::vector<GradCheckResult> check_module_gradients(std::uint64_t seed, double step = 1e-4,
                                                    double network_step = 1e-6);

/// Tiny V5 configuration used by the end-to-end gradient check.
ModelConfig tiny_v5_config();

}  // namespace tracknet
