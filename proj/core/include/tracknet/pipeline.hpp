#pragma once

#include <functional>
#include <vector>

#include "tracknet/evalkit.hpp"
#include "tracknet/model.hpp"
#include "tracknet/synthgen.hpp"

/// Sliding the model over whole sequences: every frame receives exactly one
/// heatmap from the non-overlapping evaluation windows.
namespace tracknet::pipeline {

struct FrameResult {
  int seq = 0;
  int frame = 0;
  eval::Detection detection;
  supervision::GroundTruthSpec truth;
  eval::Outcome outcome = eval::Outcome::tn;
};

struct EvalResult {
  eval::ConfusionCounts counts;
  std::vector<FrameResult> frames;
};

/// Calls `visit(seq, frame, heatmap)` once per frame with a (1, 1, H, W)
/// inference-mode heatmap, in sequence then frame order.
void for_each_heatmap(const ModelState& state, const ModelConfig& cfg, const std::vector<synth::Sequence>& data,
                      const std::function<void(int, int, const Tensor4&)>& visit, int batch = 8);

EvalResult evaluate(const ModelState& state, const ModelConfig& cfg, const std::vector<synth::Sequence>& data,
                    const eval::EvalConfig& ecfg, int batch = 8);

}  // namespace tracknet::pipeline
