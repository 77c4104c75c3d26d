#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tracknet/synthgen.hpp"

using namespace tracknet;
using namespace tracknet::synth;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tracknet_test_" + name);
  fs::remove_all(p);
  return p;
}

SceneConfig small_scene() {
  SceneConfig s;
  s.width = 32;
  s.height = 24;
  s.frames = 20;
  s.occluder_size = 5;
  return s;
}

}  // namespace

TEST(Trajectory, StraightLineWithoutWalls) {
  SceneConfig cfg;
  cfg.frames = 4;
  const auto t = simulate_trajectory(cfg, {10, 10}, {2, 1});
  ASSERT_EQ(t.size(), 4u);
  EXPECT_DOUBLE_EQ(t[3].x, 16.0);
  EXPECT_DOUBLE_EQ(t[3].y, 13.0);
}

TEST(Trajectory, ReflectsAndStaysInsideBounds) {
  SceneConfig cfg;
  cfg.frames = 200;
  const auto t = simulate_trajectory(cfg, {5, 5}, {3.3, -2.7});
  const double r = cfg.ball_radius;
  for (const auto& p : t) {
    EXPECT_GE(p.x, r);
    EXPECT_LE(p.x, cfg.width - 1 - r);
    EXPECT_GE(p.y, r);
    EXPECT_LE(p.y, cfg.height - 1 - r);
  }
  cfg.frames = 3;
  const auto b = simulate_trajectory(cfg, {cfg.width - 1 - r - 1, 10}, {3, 0});
  EXPECT_DOUBLE_EQ(b[1].x, cfg.width - 1 - r - 2);  // one step past the wall, mirrored back
}

TEST(Sequence, DeterministicAndQuantized) {
  const SceneConfig cfg = small_scene();
  const auto a = generate_sequence(cfg);
  const auto b = generate_sequence(cfg);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].x, b[i].x);
    for (const double v : a[i].image.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_DOUBLE_EQ(v * 255.0, std::round(v * 255.0));
    }
  }
  SceneConfig other = cfg;
  other.seed = 1;
  EXPECT_NE(generate_sequence(other)[0].image, a[0].image);
}

TEST(Sequence, OccludedFramesAreInvisibleAndCoverTheCentre) {
  SceneConfig cfg = small_scene();
  cfg.frames = 120;
  cfg.width = 64;
  cfg.height = 48;
  cfg.occluder_size = 9;
  const auto frames = generate_sequence(cfg);
  const auto occ = sequence_occluders(cfg);
  int hidden = 0;
  for (int k = 0; k < cfg.frames; ++k) {
    bool covered = false;
    for (const auto& o : occ) covered = covered || o.covers(frames[k].x, frames[k].y, k);
    EXPECT_EQ(frames[k].visible, !covered) << k;
    hidden += covered;
  }
  EXPECT_GT(hidden, 0);
}

TEST(Sequence, StartOverridesAreHonoured) {
  SceneConfig cfg = small_scene();
  cfg.start_position = Vec2{12, 9};
  cfg.start_velocity = Vec2{1, 0};
  cfg.scheduled_crossings = 0;
  const auto f = generate_sequence(cfg);
  EXPECT_DOUBLE_EQ(f[0].x, 12);
  EXPECT_DOUBLE_EQ(f[2].x, 14);
  EXPECT_TRUE(f[0].visible);
}

TEST(Sequence, BallIsBrightestNearItsCentreWithoutNoise) {
  SceneConfig cfg = small_scene();
  cfg.noise_sigma = 0.0;
  cfg.faint_prob = 0.0;
  cfg.distractors = 0;
  cfg.scheduled_crossings = 0;
  const Tensor4 img = render_clean(cfg, 15, 11, 1.0);
  EXPECT_NEAR(img.at(0, 0, 11, 15), std::round(cfg.ball_color[0] * 255) / 255, 1e-12);
}

TEST(Sequence, RejectsBadConfig) {
  SceneConfig cfg;
  cfg.frames = 2;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = {};
  cfg.ball_radius = 30;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = {};
  cfg.faint_prob = 1.5;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
}

TEST(Split, TrainAndValidationUseDisjointSeeds) {
  const SceneConfig cfg = small_scene();
  const auto train = generate_split(cfg, Split::train, 2);
  const auto val = generate_split(cfg, Split::val, 1);
  EXPECT_EQ(train[0].name, "seq_000");
  EXPECT_EQ(val[0].name, "seq_008");  // after all cfg.train_sequences training indices
  EXPECT_NE(train[0].frames[0].image, val[0].frames[0].image);
  EXPECT_EQ(generate_split(cfg, Split::train).size(), 8u);
}

TEST(Dataset, RoundTripsThroughDisk) {
  const SceneConfig cfg = small_scene();
  const auto seqs = generate_split(cfg, Split::train, 2);
  const fs::path root = scratch("roundtrip");
  const auto manifest = write_dataset(seqs, root);
  ASSERT_EQ(manifest.size(), 2u);
  EXPECT_TRUE(fs::exists(root / "seq_000" / "frames" / "000000.ppm"));
  const auto back = read_dataset(root);
  ASSERT_EQ(back.size(), seqs.size());
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    EXPECT_EQ(back[s].name, seqs[s].name);
    ASSERT_EQ(back[s].frames.size(), seqs[s].frames.size());
    for (std::size_t k = 0; k < seqs[s].frames.size(); ++k) {
      EXPECT_EQ(back[s].frames[k].image, seqs[s].frames[k].image);
      EXPECT_EQ(back[s].frames[k].visible, seqs[s].frames[k].visible);
      if (seqs[s].frames[k].visible) {
        EXPECT_EQ(back[s].frames[k].x, seqs[s].frames[k].x);
        EXPECT_EQ(back[s].frames[k].y, seqs[s].frames[k].y);
      }
    }
  }
  fs::remove_all(root);
}

TEST(Dataset, ReadsWithoutManifest) {
  const auto seqs = generate_split(small_scene(), Split::val, 1);
  const fs::path root = scratch("nomanifest");
  write_dataset(seqs, root);
  fs::remove(root / "manifest.csv");
  EXPECT_EQ(read_dataset(root).size(), 1u);
  fs::remove_all(root);
}

TEST(Dataset, MissingOrMalformedInputFails) {
  EXPECT_THROW(read_dataset(scratch("missing")), std::runtime_error);
  const fs::path root = scratch("malformed");
  write_dataset(generate_split(small_scene(), Split::val, 1), root);
  std::ofstream(root / "seq_008" / "labels.csv") << "frame,visibility,x,y\n0,1,3\n";
  EXPECT_THROW(read_dataset(root), std::runtime_error);
  fs::remove_all(root);
}

TEST(Images, PpmRoundTripAndBadHeader) {
  Tensor4 img(Shape{1, 3, 2, 3});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(i * 13 % 256) / 255.0;
  const fs::path dir = scratch("ppm");
  fs::create_directories(dir);
  write_ppm(dir / "a.ppm", img);
  EXPECT_EQ(read_ppm(dir / "a.ppm"), img);
  std::ofstream(dir / "b.ppm") << "P3\n1 1\n255\n0 0 0\n";
  EXPECT_THROW(read_ppm(dir / "b.ppm"), std::runtime_error);
  EXPECT_THROW(write_ppm(dir / "c.ppm", Tensor4(Shape{1, 1, 2, 2})), TensorError);
  fs::remove_all(dir);
}

TEST(Windows, TrainingAndEvaluationCoverage) {
  SceneConfig cfg = small_scene();
  cfg.frames = 10;
  const auto seqs = generate_split(cfg, Split::train, 2);
  EXPECT_EQ(training_windows(seqs).size(), 16u);
  std::vector<std::vector<int>> hits(2, std::vector<int>(10, 0));
  for (const auto& w : evaluation_windows(seqs)) {
    for (int k = 0; k < 3; ++k) hits[w.seq][w.start + k] += 1;
  }
  for (const auto& s : hits) {
    for (const int h : s) EXPECT_GE(h, 1);
  }
  const auto ev = evaluation_windows(seqs);
  EXPECT_EQ(ev.back().start, 7);  // tail aligned to the end
}
