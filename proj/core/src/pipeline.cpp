#include "tracknet/pipeline.hpp"

#include <algorithm>

#include "tracknet/trainkit.hpp"

namespace tracknet::pipeline {

void for_each_heatmap(const ModelState& state, const ModelConfig& cfg, const std::vector<synth::Sequence>& data,
                      const std::function<void(int, int, const Tensor4&)>& visit, int batch) {
  const auto windows = synth::evaluation_windows(data);
  std::vector<int> covered(data.size(), 0);
  for (std::size_t i = 0; i < windows.size(); i += batch) {
    const std::size_t end = std::min(windows.size(), i + static_cast<std::size_t>(batch));
    const std::vector<synth::Window> chunk(windows.begin() + i, windows.begin() + end);
    const auto b = train::make_batch(data, chunk, 1.0);
    if (b.prev.shape().h != cfg.height || b.prev.shape().w != cfg.width) {
      throw TensorError("pipeline: frames are " + std::to_string(b.prev.shape().w) + "x" +
                        std::to_string(b.prev.shape().h) + " but the model expects " + std::to_string(cfg.width) +
                        "x" + std::to_string(cfg.height));
    }
    const Tensor4 heat = predict(state, cfg, {b.prev, b.curr, b.next});
    const std::size_t plane = static_cast<std::size_t>(cfg.height) * cfg.width;
    for (std::size_t j = 0; j < chunk.size(); ++j) {
      const auto& w = chunk[j];
      for (int k = 0; k < 3; ++k) {
        const int frame = w.start + k;
        if (frame < covered[w.seq]) continue;
        Tensor4 one(Shape{1, 1, cfg.height, cfg.width});
        const auto src = heat.data().begin() + (j * 3 + k) * plane;
        std::copy(src, src + plane, one.data().begin());
        visit(w.seq, frame, one);
      }
      covered[w.seq] = std::max(covered[w.seq], w.start + 3);
    }
  }
}

EvalResult evaluate(const ModelState& state, const ModelConfig& cfg, const std::vector<synth::Sequence>& data,
                    const eval::EvalConfig& ecfg, int batch) {
  eval::validate(ecfg);
  EvalResult res;
  for_each_heatmap(
      state, cfg, data,
      [&](int seq, int frame, const Tensor4& heat) {
        const auto& f = data[seq].frames[frame];
        FrameResult r;
        r.seq = seq;
        r.frame = frame;
        r.detection = eval::extract_coordinate(heat, ecfg, frame);
        r.truth = {f.x, f.y, 0.0, f.visible};
        r.outcome = eval::classify_frame(r.detection, r.truth, ecfg);
        res.counts.add(r.outcome);
        res.frames.push_back(r);
      },
      batch);
  return res;
}

}  // namespace tracknet::pipeline
