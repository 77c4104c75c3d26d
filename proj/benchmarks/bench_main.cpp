#include <benchmark/benchmark.h>

#include "tracknet/model.hpp"
#include "tracknet/ops.hpp"
#include "tracknet/pipeline.hpp"
#include "tracknet/trainkit.hpp"

using namespace tracknet;

namespace {

Tensor4 random_tensor(Shape s, Rng& rng) {
  Tensor4 t(s);
  for (auto& v : t.data()) v = rng.uniform();
  return t;
}

void BM_Conv3x3(benchmark::State& st) {
  const int c = static_cast<int>(st.range(0));
  Rng rng(0);
  const Tensor4 x = random_tensor({2, c, 48, 64}, rng);
  const Tensor4 w = random_tensor({c, c, 3, 3}, rng);
  for (auto _ : st) {
    Tape tape;
    benchmark::DoNotOptimize(tape.value(ops::conv2d(tape, tape.input(x), tape.input(w), Var{}, 1, 1)));
  }
  st.SetItemsProcessed(st.iterations() * 2LL * 48 * 64 * c * c * 9);
}
BENCHMARK(BM_Conv3x3)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Conv3x3Backward(benchmark::State& st) {
  const int c = static_cast<int>(st.range(0));
  Rng rng(1);
  const Tensor4 x = random_tensor({2, c, 48, 64}, rng);
  const Tensor4 w = random_tensor({c, c, 3, 3}, rng);
  for (auto _ : st) {
    Tape tape;
    const Var xv = tape.variable(x);
    const Var wv = tape.variable(w);
    const Var loss = ops::sum(tape, ops::conv2d(tape, xv, wv, Var{}, 1, 1));
    benchmark::DoNotOptimize(tape.backward(loss).of(wv));
  }
}
BENCHMARK(BM_Conv3x3Backward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Inference(benchmark::State& st) {
  ModelConfig cfg;
  cfg.variant = static_cast<Variant>(st.range(0));
  const ModelState state = init_model(cfg, 0);
  Rng rng(2);
  const mdd::FrameTriplet t{random_tensor({1, 3, cfg.height, cfg.width}, rng),
                            random_tensor({1, 3, cfg.height, cfg.width}, rng),
                            random_tensor({1, 3, cfg.height, cfg.width}, rng)};
  for (auto _ : st) benchmark::DoNotOptimize(predict(state, cfg, t));
  st.SetLabel(std::string(to_string(cfg.variant)));
}
BENCHMARK(BM_Inference)
    ->Arg(static_cast<int>(Variant::v2))
    ->Arg(static_cast<int>(Variant::v5))
    ->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& st) {
  ModelConfig cfg;
  cfg.variant = static_cast<Variant>(st.range(0));
  ModelState state = init_model(cfg, 0);
  synth::SceneConfig scene;
  scene.frames = 8;
  const auto data = synth::generate_split(scene, synth::Split::train, 1);
  const auto batch = train::make_batch(data, {{0, 0}, {0, 3}}, 3.0);
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(train::train_step(state, cfg, batch, seed++).loss);
  st.SetLabel(std::string(to_string(cfg.variant)));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(Variant::v2))
    ->Arg(static_cast<int>(Variant::v5))
    ->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
