#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tracknet/tensor.hpp"

namespace tracknet {

enum class Mode { train, infer };

/// The closed set of differentiable operations. Every kind has a forward
/// rule and a reverse-mode rule in primitives.cpp.
enum class PrimitiveKind {
  conv2d,            // x, weight(Cout,Cin,kh,kw) [, bias(1,Cout,1,1)]
  relu,
  sigmoid,
  tanh,
  add,               // broadcasting over size-1 axes
  subtract,          // broadcasting over size-1 axes
  multiply,          // broadcasting over size-1 axes
  matmul,            // (B0,B1,M,K) x (B0,B1,K,N), optional transpose of rhs
  layer_norm,        // x, gamma(1,1,1,D), beta(1,1,1,D); normalizes the last axis
  softmax,           // last axis
  concat,            // channel axis, any number of inputs
  dropout,           // inverted dropout; identity in infer mode
  pixel_shuffle,     // (N, C*r*r, H, W) -> (N, C, H*r, W*r)
  max_pool2d,        // 2x2, stride 2
  nearest_upsample,  // x2
  batch_norm2d,      // x, gamma, beta, running_mean, running_var (all (1,C,1,1))
  linear,            // x(...,Din), weight(1,1,Din,Dout) [, bias(1,1,1,Dout)]
  patchify,          // (N, C, H, W) -> (N, C, (H/p)*(W/p), p*p)
  unpatchify,        // inverse of patchify
  abs,
  affine,            // scale * x + offset, constants
  reciprocal,
  channel_mean,      // (N, C, H, W) -> (N, 1, H, W)
  slice_channels,    // channels [start, start + count)
  reshape,
  permute,
  sum,               // -> (1,1,1,1)
  wbce,              // p, y -> (1,1,1,1) focal-weighted binary cross-entropy
};

inline constexpr std::array kAllPrimitiveKinds = {
    PrimitiveKind::conv2d,        PrimitiveKind::relu,           PrimitiveKind::sigmoid,
    PrimitiveKind::tanh,          PrimitiveKind::add,            PrimitiveKind::subtract,
    PrimitiveKind::multiply,      PrimitiveKind::matmul,         PrimitiveKind::layer_norm,
    PrimitiveKind::softmax,       PrimitiveKind::concat,         PrimitiveKind::dropout,
    PrimitiveKind::pixel_shuffle, PrimitiveKind::max_pool2d,     PrimitiveKind::nearest_upsample,
    PrimitiveKind::batch_norm2d,  PrimitiveKind::linear,         PrimitiveKind::patchify,
    PrimitiveKind::unpatchify,    PrimitiveKind::abs,            PrimitiveKind::affine,
    PrimitiveKind::reciprocal,    PrimitiveKind::channel_mean,   PrimitiveKind::slice_channels,
    PrimitiveKind::reshape,       PrimitiveKind::permute,        PrimitiveKind::sum,
    PrimitiveKind::wbce,
};

std::string_view to_string(PrimitiveKind kind);

/// Probability clamp used by the wbce primitive.
inline constexpr double kProbabilityClamp = 1e-7;

/// Operation constants. Each kind reads only the fields it documents.
struct OpParams {
  int stride = 1;        // conv2d
  int padding = 0;       // conv2d
  int factor = 2;        // pixel_shuffle, patchify, unpatchify
  int out_h = 0;         // unpatchify target height
  int out_w = 0;         // unpatchify target width
  double rate = 0.0;     // dropout
  std::uint64_t seed = 0;
  Mode mode = Mode::infer;  // dropout, batch_norm2d
  double eps = 1e-5;     // layer_norm, batch_norm2d
  bool transpose_rhs = false;  // matmul
  double scale = 1.0;    // affine
  double offset = 0.0;   // affine
  int start = 0;         // slice_channels
  int count = 0;         // slice_channels
  Shape target{};        // reshape
  std::array<int, 4> perm{0, 1, 2, 3};  // permute: output axis i takes input axis perm[i]
};

/// Forward rule. `aux` receives any values the gradient rule needs besides
/// inputs and output (dropout mask, normalization statistics).
Tensor4 primitive_forward(PrimitiveKind kind, std::span<const Tensor4* const> inputs,
                          const OpParams& params, std::vector<Tensor4>& aux);

/// Reverse rule. Accumulates into grad_inputs[i] for every non-null entry.
void primitive_backward(PrimitiveKind kind, std::span<const Tensor4* const> inputs,
                        const OpParams& params, const Tensor4& output,
                        const std::vector<Tensor4>& aux, const Tensor4& grad_output,
                        std::span<Tensor4* const> grad_inputs);

/// Multiply-accumulate count of one application; zero for non-arithmetic kinds.
std::uint64_t primitive_macs(PrimitiveKind kind, std::span<const Tensor4* const> inputs,
                             const OpParams& params, const Shape& output);

/// Deterministic keep-mask for inverted dropout: 1/(1-rate) for kept
/// entries, 0 for dropped ones.
std::vector<double> dropout_mask(std::size_t count, double rate, std::uint64_t seed);

}  // namespace tracknet
