#include <gtest/gtest.h>

#include <cmath>

#include "tracknet/backbone.hpp"
#include "tracknet/cost.hpp"
#include "tracknet/model.hpp"
#include "tracknet/ops.hpp"

using namespace tracknet;
using namespace tracknet::backbone;

namespace {

Tensor4 run_backbone(const ModelState& state, const BackboneConfig& cfg, const Tensor4& x, Mode mode = Mode::infer) {
  Tape tape;
  ForwardContext ctx{tape, state, mode, {}};
  return tape.value(backbone_forward(ctx, cfg, tape.input(x)));
}

}  // namespace

TEST(Backbone, OutputKeepsResolutionAndUsesFirstWidth) {
  BackboneConfig cfg;
  ModelState state;
  Rng rng(0);
  add_backbone(state, cfg, rng);
  const Tensor4 y = run_backbone(state, cfg, Tensor4(Shape{2, 13, 16, 24}, 0.3));
  EXPECT_EQ(y.shape(), (Shape{2, 8, 16, 24}));
}

TEST(Backbone, DecoderInputChannelsIncludeSkip) {
  BackboneConfig cfg;
  EXPECT_EQ(decoder_input_channels(cfg, 2), 64 + 32);
  EXPECT_EQ(decoder_input_channels(cfg, 0), 16 + 8);
  ModelState state;
  Rng rng(0);
  add_backbone(state, cfg, rng);
  EXPECT_EQ(state.value("backbone.dec0.conv0.weight").shape(), (Shape{8, 24, 3, 3}));
  EXPECT_EQ(state.value("backbone.enc0.conv0.weight").shape(), (Shape{8, 13, 3, 3}));
}

TEST(Backbone, RejectsIndivisibleResolution) {
  BackboneConfig cfg;
  ModelState state;
  Rng rng(0);
  add_backbone(state, cfg, rng);
  try {
    (void)run_backbone(state, cfg, Tensor4(Shape{1, 13, 12, 16}));
    FAIL() << "expected TensorError";
  } catch (const TensorError& e) {
    EXPECT_NE(std::string(e.what()).find("divisible by 8"), std::string::npos) << e.what();
  }
}

TEST(Backbone, RejectsWrongChannelCount) {
  BackboneConfig cfg;
  ModelState state;
  Rng rng(0);
  add_backbone(state, cfg, rng);
  EXPECT_THROW((void)run_backbone(state, cfg, Tensor4(Shape{1, 9, 16, 16})), TensorError);
}

TEST(Backbone, RejectsBadConfig) {
  BackboneConfig cfg;
  cfg.widths = {8};
  EXPECT_THROW(validate(cfg), TensorError);
  cfg.widths = {8, 0};
  EXPECT_THROW(validate(cfg), TensorError);
  cfg.widths = {8, 16};
  cfg.convs_per_stage = 0;
  EXPECT_THROW(validate(cfg), TensorError);
}

TEST(Backbone, InferenceIsBatchIndependent) {
  BackboneConfig cfg;
  ModelState state;
  Rng rng(1);
  add_backbone(state, cfg, rng);
  Tensor4 x(Shape{3, 13, 8, 8});
  for (auto& v : x.data()) v = rng.uniform();
  const Tensor4 whole = run_backbone(state, cfg, x);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(run_backbone(state, cfg, x.sample(i)), whole.sample(i));
}

TEST(Backbone, TrainModeCommitsRunningStatistics) {
  BackboneConfig cfg;
  cfg.widths = {4, 8};
  cfg.in_channels = 3;
  ModelState state;
  Rng rng(2);
  add_backbone(state, cfg, rng);
  Tensor4 x(Shape{2, 3, 4, 4});
  for (auto& v : x.data()) v = rng.uniform();
  Tape tape;
  ForwardContext ctx{tape, state, Mode::train, {}};
  (void)backbone_forward(ctx, cfg, tape.input(x));
  EXPECT_EQ(ctx.pending_bn.size(), 6u);

  // Independent oracle for the first layer: batch mean of the conv output.
  const Tensor4 conv_out = tape.value(tape.apply(PrimitiveKind::conv2d,
                                                 {tape.input(x), tape.input(state.value("backbone.enc0.conv0.weight"))},
                                                 OpParams{.padding = 1}));
  std::vector<double> mean(4, 0.0);
  const double count = 2.0 * 16.0;
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 4; ++c)
      for (int i = 0; i < 16; ++i) mean[c] += conv_out.at(n, c, i / 4, i % 4) / count;

  ModelState after = state;
  commit_running_stats(after, ctx);
  const Tensor4& rm = after.value("backbone.enc0.conv0.bn.running_mean");
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(rm[c], 0.9 * 0.0 + 0.1 * mean[c], 1e-12);
  EXPECT_EQ(after.entry("backbone.enc0.conv0.bn.running_mean").group, ParamGroup::buffer);
}

TEST(Backbone, ZeroInputGivesZeroFeaturesAtInit) {
  // Bias-free convs and identity batch norm at init map zero to zero.
  BackboneConfig cfg;
  ModelState state;
  Rng rng(0);
  add_backbone(state, cfg, rng);
  const Tensor4 y = run_backbone(state, cfg, Tensor4(Shape{1, 13, 8, 8}));
  EXPECT_EQ(y, Tensor4(Shape{1, 8, 8, 8}));
}

TEST(Backbone, FrozenConstantInputOutput) {
  BackboneConfig cfg;
  ModelState state;
  Rng rng(0);
  add_backbone(state, cfg, rng);
  const Tensor4 y = run_backbone(state, cfg, Tensor4(Shape{1, 13, 8, 8}, 0.5));
  double sum = 0.0;
  for (const double v : y.values()) sum += v;
  EXPECT_NEAR(sum, 2.9318243219327464, 1e-9);
}

TEST(Backbone, FrozenParameterCounts) {
  for (const auto& [variant, expected] : {std::pair{Variant::v2, 122915},
                                           std::pair{Variant::v5, 137405}}) {
    ModelConfig cfg;
    cfg.variant = variant;
    EXPECT_EQ(count_params(init_model(cfg, 0)), static_cast<std::size_t>(expected)) << to_string(variant);
  }
}
