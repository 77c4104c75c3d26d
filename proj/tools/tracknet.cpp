#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tracknet/checkpoint.hpp"
#include "tracknet/config.hpp"
#include "tracknet/cost.hpp"
#include "tracknet/gradsuite.hpp"
#include "tracknet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tracknet;

namespace {

// Missing inputs exit 1, bad usage exits 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by every command. A dedicated flag is a string bound to a
// config key so that parsing and validation go through the config layer.
struct Command {
  CLI::App* app = nullptr;
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flag_values;  // key, storage
  std::map<std::string, CLI::Option*> flag_options;
  std::map<std::string, std::string> storage;

  void flag(const std::string& name, const std::string& key, const std::string& help) {
    storage[key];
    flag_options[key] = app->add_option(name, storage[key], help + " [" + key + "]");
  }
};

Command make_command(CLI::App& root, const std::string& name, const std::string& help) {
  Command c;
  c.app = root.add_subcommand(name, help);
  c.app->add_option("--config", c.config_file, "key=value configuration file");
  c.app->add_option("--set", c.sets, "override any config key, e.g. --set train.lr=1e-3");
  return c;
}

// default < file < --set < dedicated flags
RunConfig resolve(const Command& c) {
  RunConfig cfg;
  if (!c.config_file.empty()) {
    if (!fs::exists(c.config_file)) throw InputError("config file not found: " + c.config_file);
    apply_key_values(cfg, read_config_file(c.config_file));
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, opt] : c.flag_options) {
    if (opt->count() > 0) set_config_value(cfg, key, c.storage.at(key));
  }
  cfg.scene.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  validate(cfg);
  return cfg;
}

std::vector<synth::Sequence> load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) throw InputError("no dataset given (--data)");
  if (!fs::is_directory(cfg.data)) throw InputError("dataset not found: " + cfg.data);
  auto data = synth::read_dataset(cfg.data);
  if (data.empty()) throw InputError("dataset has no sequences: " + cfg.data);
  return data;
}

checkpoint::Loaded load_checkpoint(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw InputError("no checkpoint given (--checkpoint)");
  if (!fs::exists(cfg.checkpoint)) throw InputError("checkpoint not found: " + cfg.checkpoint);
  return checkpoint::load(cfg.checkpoint);
}

void check_resolution(const ModelConfig& m, const std::vector<synth::Sequence>& data) {
  const Shape& s = data.front().frames.front().image.shape();
  if (s.h != m.height || s.w != m.width) {
    throw InputError("dataset frames are " + std::to_string(s.w) + "x" + std::to_string(s.h) + " but the model expects " +
                     std::to_string(m.width) + "x" + std::to_string(m.height));
  }
}

int run_synth(const RunConfig& cfg, const std::string& split_name) {
  const synth::Split split = split_name == "val" ? synth::Split::val : synth::Split::train;
  const int count = split == synth::Split::val ? cfg.scene.val_sequences : cfg.scene.train_sequences;
  const auto seqs = synth::generate_split(cfg.scene, split, count);
  const auto manifest = synth::write_dataset(seqs, cfg.out);
  int frames = 0;
  for (const auto& m : manifest) frames += m.frames;
  std::printf("wrote %zu sequences, %d frames to %s\n", manifest.size(), frames, cfg.out.c_str());
  return 0;
}

int run_train(RunConfig cfg) {
  const auto data = load_data(cfg);
  // The model takes its resolution from the data it is trained on.
  const Shape& s = data.front().frames.front().image.shape();
  cfg.model.height = s.h;
  cfg.model.width = s.w;
  validate(cfg);

  fs::create_directories(cfg.out);
  const fs::path log_path = fs::path(cfg.out) / "loss.csv";
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  log << "epoch,step,lr,loss\n";
  train::FitHooks hooks;
  hooks.on_step = [&](const train::StepRecord& r) {
    char line[128];
    std::snprintf(line, sizeof line, "%d,%llu,%.17g,%.17g\n", r.epoch, static_cast<unsigned long long>(r.step), r.lr,
                  r.loss);
    log << line;
  };

  const auto result = train::fit(cfg.model, init_model(cfg.model, cfg.seed), data, cfg.train, hooks);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) std::printf("epoch %zu loss %.6f\n", e, result.epoch_loss[e]);
  const fs::path ckpt = fs::path(cfg.out) / "model.ckpt";
  checkpoint::save(ckpt, cfg, result.state);
  std::printf("checkpoint %s\nloss log %s\n", ckpt.c_str(), log_path.c_str());
  if (result.diverged) {
    std::fprintf(stderr, "training diverged: %s\n", result.message.c_str());
    return 1;
  }
  return 0;
}

eval::ConfusionCounts parse_counts(const std::string& s) {
  std::vector<long> v;
  std::stringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stol(item, &used));
      if (used != item.size() || v.back() < 0) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--counts expects non-negative integers, got '" + item + "'");
    }
  }
  if (v.size() != 5) throw ConfigError("--counts expects tp,fp1,fp2,tn,fn");
  return {v[0], v[1], v[2], v[3], v[4]};
}

void write_reports(const RunConfig& cfg, const std::vector<eval::ReportRow>& rows) {
  eval::write_report_table(std::cout, rows);
  fs::create_directories(cfg.out);
  std::ofstream table(fs::path(cfg.out) / "report.txt");
  eval::write_report_table(table, rows);
  std::ofstream csv(fs::path(cfg.out) / "report.csv");
  eval::write_report_csv(csv, rows);
}

int run_eval(const RunConfig& cfg, const std::string& counts, const std::string& name) {
  if (!counts.empty()) {
    write_reports(cfg, {{name, parse_counts(counts)}});
    return 0;
  }
  const auto loaded = load_checkpoint(cfg);
  const auto data = load_data(cfg);
  check_resolution(loaded.config.model, data);
  const auto result = pipeline::evaluate(loaded.state, loaded.config.model, data, cfg.eval);
  write_reports(cfg, {{name.empty() ? std::string(to_string(loaded.config.model.variant)) : name, result.counts}});
  return 0;
}

void draw_cross(Tensor4& img, double cx, double cy, double value) {
  const int x = static_cast<int>(std::lround(cx));
  const int y = static_cast<int>(std::lround(cy));
  const Shape& s = img.shape();
  for (int d = -3; d <= 3; ++d) {
    for (int c = 0; c < s.c; ++c) {
      if (x + d >= 0 && x + d < s.w && y >= 0 && y < s.h) img.at(0, c, y, x + d) = value;
      if (y + d >= 0 && y + d < s.h && x >= 0 && x < s.w) img.at(0, c, y + d, x) = value;
    }
  }
}

int run_infer(const RunConfig& cfg) {
  const auto loaded = load_checkpoint(cfg);
  const auto data = load_data(cfg);
  check_resolution(loaded.config.model, data);
  fs::create_directories(cfg.out);
  std::ofstream det(fs::path(cfg.out) / "detections.csv");
  det << "sequence,frame,detected,x,y,peak,visible,gt_x,gt_y\n";
  pipeline::for_each_heatmap(loaded.state, loaded.config.model, data, [&](int seq, int frame, const Tensor4& heat) {
    const auto& sequence = data[seq];
    const auto& labeled = sequence.frames[frame];
    const fs::path dir = fs::path(cfg.out) / sequence.name;
    fs::create_directories(dir);
    char stem[32];
    std::snprintf(stem, sizeof stem, "%06d", frame);
    synth::write_pgm(dir / ("heatmap_" + std::string(stem) + ".pgm"), heat);

    const eval::Detection d = eval::extract_coordinate(heat, cfg.eval, frame);
    // Ground truth in black, prediction in white on top.
    Tensor4 overlay = labeled.image;
    if (labeled.visible) draw_cross(overlay, labeled.x, labeled.y, 0.0);
    if (d.center) draw_cross(overlay, d.center->x / cfg.eval.scale_x, d.center->y / cfg.eval.scale_y, 1.0);
    synth::write_ppm(dir / ("overlay_" + std::string(stem) + ".ppm"), overlay);

    char line[256];
    std::snprintf(line, sizeof line, "%s,%d,%d,%.4f,%.4f,%.6f,%d,%.4f,%.4f\n", sequence.name.c_str(), frame,
                  d.center ? 1 : 0, d.center ? d.center->x : 0.0, d.center ? d.center->y : 0.0, d.peak,
                  labeled.visible ? 1 : 0, labeled.x, labeled.y);
    det << line;
  });
  std::printf("wrote heatmaps and overlays for %zu sequences to %s\n", data.size(), cfg.out.c_str());
  return 0;
}

int run_gradcheck(const RunConfig& cfg, double tolerance, int seeds) {
  std::map<std::string, double> worst;
  std::vector<std::string> order;
  auto record = [&](const std::vector<GradCheckResult>& results) {
    for (const auto& r : results) {
      auto [it, fresh] = worst.try_emplace(r.name, r.max_error);
      if (fresh) order.push_back(r.name);
      else it->second = std::max(it->second, r.max_error);
    }
  };
  for (int i = 0; i < seeds; ++i) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
    record(check_primitive_gradients(seed));
    record(check_module_gradients(seed));
  }
  int failures = 0;
  for (const auto& name : order) {
    const double e = worst[name];
    const bool ok = e < tolerance;
    if (!ok) ++failures;
    std::printf("%-40s %.3e %s\n", name.c_str(), e, ok ? "ok" : "FAIL");
  }
  std::printf("%zu checks, %d over tolerance %.1e\n", order.size(), failures, tolerance);
  return failures == 0 ? 0 : 1;
}

int run_stats(const RunConfig& cfg) {
  const ModelState state = init_model(cfg.model, cfg.seed);
  const FlopBreakdown f = estimate_flops(cfg.model);
  std::printf("variant    %s\n", std::string(to_string(cfg.model.variant)).c_str());
  std::printf("input      %d x %d, %d channels\n", cfg.model.width, cfg.model.height, input_channels(cfg.model.variant));
  std::printf("params     %zu\n", count_params(state));
  std::printf("macs       %llu\n", static_cast<unsigned long long>(f.total()));
  std::printf("  backbone %llu\n", static_cast<unsigned long long>(f.backbone));
  std::printf("  draft    %llu\n", static_cast<unsigned long long>(f.draft));
  std::printf("  fusion   %llu\n", static_cast<unsigned long long>(f.fusion));
  std::printf("  tsatt    %llu\n", static_cast<unsigned long long>(f.tsatt));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale shuttlecock/ball tracking: synthesis, training, evaluation and inference"};
  app.require_subcommand(1);

  Command synth_cmd = make_command(app, "synth", "generate a synthetic dataset");
  synth_cmd.flag("--seed", "seed", "scene seed");
  synth_cmd.flag("--out", "out", "output directory");
  synth_cmd.flag("--frames", "scene.frames", "frames per sequence");
  std::string split = "train";
  synth_cmd.app->add_option("--split", split, "train or val")->check(CLI::IsMember({"train", "val"}));
  int sequence_count = 0;
  CLI::Option* sequences =
      synth_cmd.app->add_option("--sequences", sequence_count, "number of sequences in the split")->check(CLI::PositiveNumber);

  Command train_cmd = make_command(app, "train", "train a model on a dataset");
  train_cmd.flag("--seed", "seed", "initialization and sampling seed");
  train_cmd.flag("--data", "data", "dataset directory");
  train_cmd.flag("--out", "out", "output directory");
  train_cmd.flag("--variant", "model.variant", "v2, v4like, v2_mdd, v2_rstr or v5");
  train_cmd.flag("--epochs", "train.epochs", "epochs");
  train_cmd.flag("--lr", "train.lr", "base learning rate");

  Command eval_cmd = make_command(app, "eval", "evaluate a checkpoint on a dataset");
  eval_cmd.flag("--seed", "seed", "seed");
  eval_cmd.flag("--data", "data", "dataset directory");
  eval_cmd.flag("--checkpoint", "checkpoint", "checkpoint manifest");
  eval_cmd.flag("--out", "out", "output directory");
  std::string counts, name;
  eval_cmd.app->add_option("--counts", counts, "fixture mode: report raw counts tp,fp1,fp2,tn,fn");
  eval_cmd.app->add_option("--name", name, "model name in the report");

  Command infer_cmd = make_command(app, "infer", "write heatmaps and overlays for a dataset");
  infer_cmd.flag("--seed", "seed", "seed");
  infer_cmd.flag("--data", "data", "dataset directory");
  infer_cmd.flag("--checkpoint", "checkpoint", "checkpoint manifest");
  infer_cmd.flag("--out", "out", "output directory");

  Command grad_cmd = make_command(app, "gradcheck", "finite-difference check of every primitive and module");
  grad_cmd.flag("--seed", "seed", "first seed");
  double tolerance = 1e-4;
  int seeds = 5;
  grad_cmd.app->add_option("--tolerance", tolerance, "maximum relative error")->check(CLI::PositiveNumber);
  grad_cmd.app->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);

  Command stats_cmd = make_command(app, "stats", "parameter and multiply-accumulate counts");
  stats_cmd.flag("--seed", "seed", "seed");
  stats_cmd.flag("--variant", "model.variant", "v2, v4like, v2_mdd, v2_rstr or v5");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd.app->parsed()) {
      RunConfig cfg = resolve(synth_cmd);
      if (sequences->count() > 0) {
        (split == "val" ? cfg.scene.val_sequences : cfg.scene.train_sequences) = sequence_count;
      }
      return run_synth(cfg, split);
    }
    if (train_cmd.app->parsed()) return run_train(resolve(train_cmd));
    if (eval_cmd.app->parsed()) return run_eval(resolve(eval_cmd), counts, name);
    if (infer_cmd.app->parsed()) return run_infer(resolve(infer_cmd));
    if (grad_cmd.app->parsed()) return run_gradcheck(resolve(grad_cmd), tolerance, seeds);
    if (stats_cmd.app->parsed()) return run_stats(resolve(stats_cmd));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
