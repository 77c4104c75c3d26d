#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tracknet/tensor.hpp"

/// Bouncing-ball video generator with moving occluders, static distractors,
/// faint frames and sensor noise. Output is the dataset layout the rest of
/// the pipeline ingests: root/<seq>/frames/%06d.ppm plus root/<seq>/labels.csv.
namespace tracknet::synth {

using Color = std::array<double, 3>;

/// Axis-aligned box covering pixel centers x0 <= x <= x0 + w, y0 <= y <= y0 + h
/// at frame 0, translated by (vx, vy) per frame.
struct Occluder {
  double x0 = 0.0;
  double y0 = 0.0;
  double w = 0.0;
  double h = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  Color color{0.45, 0.45, 0.45};

  [[nodiscard]] bool covers(double x, double y, int frame) const;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct SceneConfig {
  int width = 64;
  int height = 48;
  int frames = 120;
  double ball_radius = 2.0;
  double speed_min = 1.5;
  double speed_max = 3.5;
  Color ball_color{0.95, 0.85, 0.2};
  /// Background colour is drawn per sequence around this value.
  Color background{0.2, 0.3, 0.25};
  /// Extra occluders beyond the scheduled ones.
  std::vector<Occluder> occluders;
  /// Occluders placed so that they cross the ball's path; crossing frames
  /// are spread over the sequence.
  int scheduled_crossings = 3;
  double occluder_size = 9.0;
  double occluder_speed = 0.6;
  /// Static ball-sized blobs in the ball's colour.
  int distractors = 3;
  /// Static background patches in colours near the background.
  int clutter = 12;
  /// Probability that a frame shows the ball at reduced contrast.
  double faint_prob = 0.2;
  double faint_contrast = 0.3;
  double noise_sigma = 0.06;
  std::uint64_t seed = 0;
  std::optional<Vec2> start_position;
  std::optional<Vec2> start_velocity;

  int train_sequences = 8;
  int val_sequences = 2;
};

void validate(const SceneConfig& cfg);

struct LabeledFrame {
  Tensor4 image;  // (1, 3, H, W), multiples of 1/255
  bool visible = false;
  double x = 0.0;
  double y = 0.0;
  /// Ball contrast used for this frame (1 for normal frames). Not stored on disk.
  double contrast = 1.0;
};

struct Sequence {
  std::string name;
  std::vector<LabeledFrame> frames;
};

/// Ball centres for every frame: start, then x += vx with reflection at
/// [r, W-1-r] (and likewise for y).
std::vector<Vec2> simulate_trajectory(const SceneConfig& cfg, Vec2 start, Vec2 velocity);

std::vector<LabeledFrame> generate_sequence(const SceneConfig& cfg);

/// Background, distractors and the ball at (cx, cy) with the given contrast:
/// no occluders, no noise, quantized like generated frames. Uses the
/// per-sequence background and distractor layout drawn from cfg.seed.
Tensor4 render_clean(const SceneConfig& cfg, double cx, double cy, double contrast);

/// Occluders active in a generated sequence (explicit plus scheduled).
std::vector<Occluder> sequence_occluders(const SceneConfig& cfg);

enum class Split { train, val };

/// Sequence i of a split uses seed mix_seed(cfg.seed, i), with validation
/// indices following the training ones. Names are seq_<index>.
std::vector<Sequence> generate_split(const SceneConfig& cfg, Split split, int count = -1);

struct ManifestEntry {
  std::string name;
  int frames = 0;
};

/// Writes every sequence plus root/manifest.csv. Throws std::runtime_error
/// when the root cannot be written.
std::vector<ManifestEntry> write_dataset(const std::vector<Sequence>& sequences, const std::filesystem::path& root);

/// Reads root/manifest.csv when present, otherwise every subdirectory with a
/// labels.csv in name order.
std::vector<Sequence> read_dataset(const std::filesystem::path& root);

void write_ppm(const std::filesystem::path& path, const Tensor4& image);
Tensor4 read_ppm(const std::filesystem::path& path);
/// Single-channel 8-bit image (P5) of a [0, 1] plane.
void write_pgm(const std::filesystem::path& path, const Tensor4& plane);

/// 3-frame window starting at `start` within sequence `seq`.
struct Window {
  int seq = 0;
  int start = 0;
};

/// All n-2 overlapping windows of every sequence, in sequence order.
std::vector<Window> training_windows(const std::vector<Sequence>& data);
/// Non-overlapping windows covering every frame once; a short tail is
/// covered by a window aligned to the sequence end.
std::vector<Window> evaluation_windows(const std::vector<Sequence>& data);

}  // namespace tracknet::synth
