#pragma once

#include <string>

#include "tracknet/model_state.hpp"
#include "tracknet/nn.hpp"
#include "tracknet/tensor.hpp"

/// Motion Direction Decoupling: signed polarity fields of adjacent-frame
/// differences, a learnable sigmoid attention mapping with bounded slope
/// and offset, and the interleaved 13-channel backbone input.
namespace tracknet::mdd {

/// Three consecutive RGB frames, each (N, 3, H, W) with values in [0, 1].
struct FrameTriplet {
  Tensor4 prev;
  Tensor4 curr;
  Tensor4 next;

  /// Throws TensorError unless the frames share a 3-channel shape and lie in [0, 1].
  void validate() const;
};

struct PolarityFields {
  Tensor4 plus;   // brightening part, max(delta, 0)
  Tensor4 minus;  // darkening part, max(-delta, 0)
};

struct AttentionParams {
  double alpha = 1.0;
  double beta = 0.0;
  double eps = 1e-6;
};

/// How motion enters the attention maps. `polarity` keeps P+ and P- apart;
/// `absolute` feeds |delta| to both channels (a sign-blind baseline).
enum class MotionEncoding { polarity, absolute };

struct MddConfig {
  double eps = 1e-6;
  double alpha_init = 1.0;
  double beta_init = 0.0;
  /// Separate (alpha, beta) per polarity instead of one shared pair.
  bool per_polarity = false;
};

inline constexpr int kAugmentedChannels = 13;

/// later - earlier, signed and unclipped.
Tensor4 raw_difference(const Tensor4& earlier, const Tensor4& later);
PolarityFields polarity_decompose(const Tensor4& delta);

/// k(alpha) = 5 / (0.45 |tanh alpha| + eps)
double slope(double alpha, double eps);
/// m(beta) = 0.6 tanh beta
double center(double beta);

/// sigma(k(alpha) (|x| - m(beta))) after averaging x over its channels.
/// (N, C, H, W) -> (N, 1, H, W).
Tensor4 attention_map(const Tensor4& x, const AttentionParams& params);

/// Channel layout [prev(3), a1(2), curr(3), a2(2), next(3)].
Tensor4 build_input(const FrameTriplet& triplet, const Tensor4& a1, const Tensor4& a2);

// ---- differentiable path ---------------------------------------------------

void add_parameters(ModelState& state, const MddConfig& cfg);

/// Parameter names holding (alpha, beta) for a polarity ("plus"/"minus").
std::string alpha_name(const MddConfig& cfg, bool plus);
std::string beta_name(const MddConfig& cfg, bool plus);

/// Attention mapping on the tape with alpha/beta as tape variables.
Var attention_map(Tape& tape, Var field, Var alpha, Var beta, double eps);

/// Two-channel attention stack {A(P+), A(P-)} for one interval.
Var interval_attention(ForwardContext& ctx, const MddConfig& cfg, MotionEncoding encoding, Var earlier, Var later);

Var build_input(Tape& tape, Var prev, Var a1, Var curr, Var a2, Var next);

}  // namespace tracknet::mdd
