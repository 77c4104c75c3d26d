#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tracknet/tape.hpp"

namespace tracknet {

/// Builds a scalar on `tape` from the differentiable leaf `x`.
using ScalarFn = std::function<Var(Tape& tape, Var x)>;

/// Max over coordinates of |analytic - central difference| /
/// max(|analytic|, |central|, 1e-8). When `coords` is non-empty only those
/// flat indices are probed.
double finite_diff_check(const ScalarFn& fn, const Tensor4& point, double step = 1e-4,
                         std::span<const std::size_t> coords = {});

struct GradCheckResult {
  std::string name;
  double max_error = 0.0;
};

/// Finite-difference check of every input of every PrimitiveKind, on random
/// inputs drawn from `seed`. One entry per (kind, input) pair.
std::vector<GradCheckResult> check_primitive_gradients(std::uint64_t seed, double step = 1e-4);

}  // namespace tracknet
