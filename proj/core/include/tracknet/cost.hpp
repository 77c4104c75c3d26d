#pragma once

#include <cstdint>

#include "tracknet/model.hpp"

namespace tracknet {

/// Multiply-accumulate accounting. Elementwise work (activations,
/// normalization, the MDD mapping) is not counted.
namespace macs {

std::uint64_t conv(int cin, int cout, int kh, int kw, int hout, int wout);
/// QKV projections 3*T*d*d + scores T*T*d + value mix T*T*d + output T*d*d.
std::uint64_t attention(int tokens, int dim);
/// Two token-wise layers d -> m*d -> d.
std::uint64_t feed_forward(int tokens, int dim, int multiplier);

}  // namespace macs

struct FlopBreakdown {
  std::uint64_t backbone = 0;
  std::uint64_t draft = 0;
  std::uint64_t fusion = 0;
  std::uint64_t tsatt = 0;

  [[nodiscard]] std::uint64_t total() const { return backbone + draft + fusion + tsatt; }
};

/// Analytic MAC count of one forward pass for `batch` triplets.
FlopBreakdown estimate_flops(const ModelConfig& cfg, int batch = 1);

}  // namespace tracknet
