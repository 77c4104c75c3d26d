#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "tracknet/cost.hpp"
#include "tracknet/gradcheck.hpp"
#include "tracknet/model.hpp"
#include "tracknet/nn.hpp"
#include "tracknet/ops.hpp"
#include "tracknet/random.hpp"

using namespace tracknet;

namespace {

Tensor4 row(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Tensor4(Shape{1, 1, 1, n}, std::move(v));
}

Tensor4 random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor4 t(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

Tensor4 run(PrimitiveKind kind, std::vector<Tensor4> inputs, const OpParams& p = {}) {
  std::vector<const Tensor4*> ptrs;
  for (const auto& t : inputs) ptrs.push_back(&t);
  std::vector<Tensor4> aux;
  return primitive_forward(kind, ptrs, p, aux);
}

}  // namespace

TEST(Primitives, ReluExample) {
  EXPECT_EQ(run(PrimitiveKind::relu, {row({-1, 0, 2})}), row({0, 0, 2}));
}

TEST(Primitives, SigmoidOfZeroIsHalf) { EXPECT_EQ(run(PrimitiveKind::sigmoid, {row({0})}).item(), 0.5); }

TEST(Primitives, SigmoidStaysInsideOpenInterval) {
  const Tensor4 y = run(PrimitiveKind::sigmoid, {row({-800, -40, 40, 800})});
  for (const double v : y.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Primitives, PixelShuffleLayout) {
  Tensor4 x(Shape{1, 4, 3, 3});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  OpParams p;
  p.factor = 2;
  const Tensor4 y = run(PrimitiveKind::pixel_shuffle, {x}, p);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 6, 6}));
  for (int yy = 0; yy < 6; ++yy) {
    for (int xx = 0; xx < 6; ++xx) {
      EXPECT_EQ(y.at(0, 0, yy, xx), x.at(0, 2 * (yy % 2) + (xx % 2), yy / 2, xx / 2));
    }
  }
}

TEST(Primitives, PixelShuffleThenInverseIsIdentity) {
  Rng rng(3);
  const Tensor4 x = random_tensor({2, 8, 3, 4}, rng);
  OpParams p;
  p.factor = 2;
  const Tensor4 y = run(PrimitiveKind::pixel_shuffle, {x}, p);
  // Inverse rearrangement written out independently.
  Tensor4 back(x.shape());
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 2; ++c)
      for (int yy = 0; yy < 6; ++yy)
        for (int xx = 0; xx < 8; ++xx) back.at(n, c * 4 + 2 * (yy % 2) + (xx % 2), yy / 2, xx / 2) = y.at(n, c, yy, xx);
  EXPECT_EQ(back, x);
}

TEST(Primitives, PatchifyUnpatchifyRoundTrip) {
  Rng rng(4);
  const Tensor4 x = random_tensor({2, 3, 8, 12}, rng);
  OpParams p;
  p.factor = 4;
  const Tensor4 patches = run(PrimitiveKind::patchify, {x}, p);
  EXPECT_EQ(patches.shape(), (Shape{2, 3, 6, 16}));
  p.out_h = 8;
  p.out_w = 12;
  EXPECT_EQ(run(PrimitiveKind::unpatchify, {patches}, p), x);
}

TEST(Primitives, ConcatThenSliceRecoversInputs) {
  Rng rng(5);
  const Tensor4 a = random_tensor({2, 2, 3, 3}, rng);
  const Tensor4 b = random_tensor({2, 3, 3, 3}, rng);
  const Tensor4 c = random_tensor({2, 1, 3, 3}, rng);
  const Tensor4 cat = run(PrimitiveKind::concat, {a, b, c});
  OpParams p;
  p.start = 0;
  p.count = 2;
  EXPECT_EQ(run(PrimitiveKind::slice_channels, {cat}, p), a);
  p.start = 2;
  p.count = 3;
  EXPECT_EQ(run(PrimitiveKind::slice_channels, {cat}, p), b);
  p.start = 5;
  p.count = 1;
  EXPECT_EQ(run(PrimitiveKind::slice_channels, {cat}, p), c);
}

TEST(Primitives, DropoutModes) {
  Rng rng(6);
  const Tensor4 x = random_tensor({1, 2, 5, 5}, rng);
  OpParams p;
  p.rate = 0.0;
  p.mode = Mode::train;
  EXPECT_EQ(run(PrimitiveKind::dropout, {x}, p), x);
  p.mode = Mode::infer;
  EXPECT_EQ(run(PrimitiveKind::dropout, {x}, p), x);
  p.rate = 0.7;
  EXPECT_EQ(run(PrimitiveKind::dropout, {x}, p), x);
}

TEST(Primitives, DeterministicForIdenticalArguments) {
  Rng rng(7);
  const Tensor4 x = random_tensor({2, 3, 6, 6}, rng);
  const Tensor4 w = random_tensor({4, 3, 3, 3}, rng);
  OpParams p;
  p.padding = 1;
  EXPECT_EQ(run(PrimitiveKind::conv2d, {x, w}, p), run(PrimitiveKind::conv2d, {x, w}, p));
  OpParams d;
  d.rate = 0.4;
  d.mode = Mode::train;
  d.seed = 99;
  EXPECT_EQ(run(PrimitiveKind::dropout, {x}, d), run(PrimitiveKind::dropout, {x}, d));
  const Tensor4 first = run(PrimitiveKind::dropout, {x}, d);
  d.seed = 100;
  EXPECT_NE(run(PrimitiveKind::dropout, {x}, d), first);
}

TEST(Primitives, BatchIndependenceOutsideTrainingBatchNorm) {
  Rng rng(8);
  const Tensor4 x = random_tensor({3, 2, 4, 4}, rng);
  const Tensor4 w = random_tensor({3, 2, 3, 3}, rng);
  const Tensor4 b = random_tensor({1, 3, 1, 1}, rng);
  const Shape cs{1, 2, 1, 1};
  const Tensor4 gamma = random_tensor(cs, rng, 0.5, 1.5), beta = random_tensor(cs, rng);
  const Tensor4 mean = random_tensor(cs, rng), var = random_tensor(cs, rng, 0.5, 2.0);
  OpParams conv;
  conv.padding = 1;
  OpParams bn;
  bn.mode = Mode::infer;
  const Tensor4 whole_conv = run(PrimitiveKind::conv2d, {x, w, b}, conv);
  const Tensor4 whole_bn = run(PrimitiveKind::batch_norm2d, {x, gamma, beta, mean, var}, bn);
  const Tensor4 whole_pool = run(PrimitiveKind::max_pool2d, {x});
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(run(PrimitiveKind::conv2d, {x.sample(i), w, b}, conv), whole_conv.sample(i));
    EXPECT_EQ(run(PrimitiveKind::batch_norm2d, {x.sample(i), gamma, beta, mean, var}, bn), whole_bn.sample(i));
    EXPECT_EQ(run(PrimitiveKind::max_pool2d, {x.sample(i)}), whole_pool.sample(i));
  }
}

TEST(Primitives, ShapeMismatchNamesKindAndDimensions) {
  try {
    run(PrimitiveKind::add, {Tensor4(Shape{1, 2, 3, 3}), Tensor4(Shape{1, 3, 3, 3})});
    FAIL() << "expected TensorError";
  } catch (const TensorError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("add"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(1, 2, 3, 3)"), std::string::npos) << msg;
  }
}

TEST(Primitives, NonFiniteInputIsRejected) {
  EXPECT_THROW(run(PrimitiveKind::relu, {row({1.0, std::nan("")})}), TensorError);
  EXPECT_THROW(run(PrimitiveKind::sigmoid, {row({INFINITY})}), TensorError);
}

TEST(Primitives, EveryKindHasAForwardAndGradientRule) {
  std::set<std::string> covered;
  for (const auto& r : check_primitive_gradients(0)) covered.insert(r.name.substr(0, r.name.find_first_of("/[")));
  for (const PrimitiveKind k : kAllPrimitiveKinds) EXPECT_TRUE(covered.contains(std::string(to_string(k)))) << to_string(k);
}

class PrimitiveGradients : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(PrimitiveGradients, MatchCentralDifferences) {
  for (const auto& r : check_primitive_gradients(GetParam())) EXPECT_LT(r.max_error, 1e-4) << r.name;
}

INSTANTIATE_TEST_SUITE_P(FiveSeeds, PrimitiveGradients, ::testing::Values(0, 1, 2, 3, 4));

TEST(Backward, ReluSumExample) {
  Tape t;
  const Var x = t.variable(row({-1, 2}));
  const Gradients g = t.backward(ops::sum(t, ops::relu(t, x)));
  EXPECT_EQ(g.of(x), row({0, 1}));
}

TEST(Backward, SigmoidSumExample) {
  Tape t;
  const Var x = t.variable(row({0}));
  EXPECT_EQ(t.backward(ops::sum(t, ops::sigmoid(t, x))).of(x).item(), 0.25);
}

TEST(Backward, RandomCompositeOfFiveParameters) {
  Rng rng(42);
  std::vector<Tensor4> params;
  for (int i = 0; i < 5; ++i) params.push_back(random_tensor({1, 2, 3, 3}, rng, -0.8, 0.8));
  const Tensor4 projection = random_tensor({1, 2, 3, 3}, rng);
  // Differentiate with respect to each parameter in turn, others held fixed.
  for (std::size_t which = 0; which < params.size(); ++which) {
    const ScalarFn fn = [&](Tape& t, Var x) {
      std::vector<Var> v;
      for (std::size_t i = 0; i < params.size(); ++i) v.push_back(i == which ? x : t.input(params[i]));
      Var h = ops::tanh(t, ops::multiply(t, v[0], v[1]));
      h = ops::add(t, h, ops::sigmoid(t, ops::subtract(t, v[2], v[3])));
      h = ops::multiply(t, h, ops::softmax(t, v[4]));
      h = ops::layer_norm(t, h, t.input(Tensor4(Shape{1, 1, 1, 3}, 1.0)), t.input(Tensor4(Shape{1, 1, 1, 3}, 0.0)));
      // Rows of a layer norm sum to zero, so project before reducing.
      return ops::sum(t, ops::multiply(t, h, t.input(projection)));
    };
    EXPECT_LT(finite_diff_check(fn, params[which]), 1e-4) << "parameter " << which;
  }
}

TEST(Backward, RejectsNonScalarAndForeignLoss) {
  Tape a;
  const Var x = a.variable(row({1, 2}));
  EXPECT_THROW((void)a.backward(x), TensorError);
  Tape b;
  const Var y = b.variable(row({1}));
  EXPECT_THROW((void)a.backward(y), TensorError);
}

TEST(Backward, ParameterGradientsAreKeyedByName) {
  const Tensor4 w = row({3.0});
  Tape t;
  const Var p = t.parameter("w", w);
  const Var x = t.input(row({2.0}));
  const Gradients g = t.backward(ops::sum(t, ops::multiply(t, p, x)));
  EXPECT_EQ(g.of("w").item(), 2.0);
}

TEST(Tape, ReplayReproducesOutputs) {
  Rng rng(9);
  Tape t;
  const Var x = t.variable(random_tensor({2, 3, 4, 4}, rng));
  const Var w = t.variable(random_tensor({2, 3, 3, 3}, rng));
  Var h = ops::conv2d(t, x, w, Var{}, 1, 1);
  h = ops::dropout(t, ops::relu(t, h), 0.3, Mode::train, 11);
  (void)ops::sum(t, ops::max_pool2d(t, h));
  EXPECT_TRUE(t.replay_matches());
}

TEST(FiniteDiff, SumOfSquares) {
  const ScalarFn fn = [](Tape& t, Var x) { return ops::sum(t, ops::multiply(t, x, x)); };
  EXPECT_LT(finite_diff_check(fn, row({1, 2, 3}), 1e-4), 1e-6);
}

TEST(FiniteDiff, ConstantFunctionHasZeroError) {
  const ScalarFn fn = [](Tape& t, Var) { return t.input(Tensor4::scalar(3.0)); };
  EXPECT_EQ(finite_diff_check(fn, row({1, 2}), 1e-4), 0.0);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  const ScalarFn fn = [](Tape& t, Var x) { return ops::sum(t, x); };
  EXPECT_THROW((void)finite_diff_check(fn, row({1}), 0.0), TensorError);
}

TEST(Cost, ConvFormulaExample) { EXPECT_EQ(macs::conv(3, 4, 3, 3, 8, 8), 6912u); }

TEST(Cost, AttentionAccountingExample) { EXPECT_EQ(macs::attention(12, 8), 5376u); }

TEST(Cost, TapeCountsAgreeWithEstimator) {
  ModelConfig cfg;
  cfg.variant = Variant::v5;
  const ModelState state = init_model(cfg, 0);
  Tape tape;
  ForwardContext ctx{tape, state, Mode::infer, {}};
  const Tensor4 frame(Shape{1, 3, cfg.height, cfg.width}, 0.5);
  (void)forward(ctx, cfg, tape.input(frame), tape.input(frame), tape.input(frame), ForwardOptions{});
  EXPECT_EQ(tape.macs(), estimate_flops(cfg).total());
}

TEST(Cost, V5OverheadOverV2BelowTenPercent) {
  ModelConfig v2;
  v2.variant = Variant::v2;
  ModelConfig v5;
  v5.variant = Variant::v5;
  const double overhead = static_cast<double>(estimate_flops(v5).total()) / estimate_flops(v2).total() - 1.0;
  EXPECT_GT(overhead, 0.0);
  EXPECT_LT(overhead, 0.10);
}

TEST(Cost, SingleConvParameterCount) {
  ModelState s;
  Rng rng(0);
  nn::add_conv2d(s, "c", 3, 4, 3, true, rng);
  EXPECT_EQ(count_params(s), 112u);
}
