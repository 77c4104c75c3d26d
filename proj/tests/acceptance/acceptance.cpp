// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 when any
// selected criterion fails.
//
//   tracknet_acceptance [--criteria 1,2,...] [--work DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "tracknet/cost.hpp"
#include "tracknet/gradsuite.hpp"
#include "tracknet/model.hpp"
#include "tracknet/ops.hpp"
#include "tracknet/pipeline.hpp"
#include "tracknet/supervision.hpp"
#include "tracknet/trainkit.hpp"

using namespace tracknet;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

void note(const char* fmt, auto... args) {
  std::printf("  ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

Tensor4 random_tensor(Shape s, Rng& rng, double lo, double hi) {
  Tensor4 t(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// ---- 1 ---------------------------------------------------------------------

struct PublishedRow {
  const char* name;
  eval::ConfusionCounts counts;
  double acc, precision, recall, f1;
};

Verdict metric_oracle() {
  // Reference confusion counts with their published metrics (two datasets,
  // three models each).
  const PublishedRow rows[] = {
      {"v2/a", {15988, 108, 23, 626, 937}, 0.9396, 0.9919, 0.9446, 0.9677},
      {"v4/a", {15669, 47, 8, 641, 1317}, 0.9224, 0.9965, 0.9225, 0.9581},
      {"v5/a", {16573, 116, 13, 636, 344}, 0.9733, 0.9923, 0.9797, 0.9859},
      {"v2/b", {10615, 54, 3, 180, 461}, 0.9542, 0.9947, 0.9584, 0.9762},
      {"v4/b", {10555, 52, 9, 174, 523}, 0.9484, 0.9943, 0.9528, 0.9731},
      {"v5/b", {10864, 80, 2, 181, 186}, 0.9763, 0.9925, 0.9832, 0.9878},
  };
  const auto t0 = Clock::now();
  Verdict v;
  double worst = 0.0;
  for (const auto& r : rows) {
    const auto m = eval::compute_metrics(r.counts);
    const std::tuple<const char*, double, double> checks[] = {{"accuracy", m.accuracy, r.acc},
                                                              {"precision", m.precision, r.precision},
                                                              {"recall", m.recall, r.recall},
                                                              {"f1", m.f1, r.f1}};
    for (const auto& [metric, got, want] : checks) {
      worst = std::max(worst, std::abs(got - want));
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s %s computed %.7f, published %.4f", r.name, metric, got, want);
      v.require(std::abs(got - want) <= 5e-5, buf);
    }
  }
  const double secs = seconds_since(t0);
  v.require(secs < 1.0, "took " + std::to_string(secs) + " s");
  if (v.pass) v.detail = "6 rows, max abs error " + std::to_string(worst);
  return v;
}

// ---- 2 ---------------------------------------------------------------------

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  Verdict v;
  double worst = 0.0;
  std::set<std::string> kinds;
  std::size_t checks = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto results = check_primitive_gradients(seed);
    for (const auto& r : results) kinds.insert(r.name.substr(0, r.name.find_first_of("/[")));
    const auto module = check_module_gradients(seed);
    results.insert(results.end(), module.begin(), module.end());
    for (const auto& r : results) {
      ++checks;
      worst = std::max(worst, r.max_error);
      v.require(r.max_error < 1e-4, "seed " + std::to_string(seed) + " " + r.name + " error " + std::to_string(r.max_error));
    }
  }
  for (const PrimitiveKind k : kAllPrimitiveKinds) {
    v.require(kinds.contains(std::string(to_string(k))), "no check for " + std::string(to_string(k)));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 120.0, "took " + std::to_string(secs) + " s");
  if (v.pass) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu checks over 5 seeds, max rel error %.2e, %.1f s", checks, worst, secs);
    v.detail = buf;
  }
  return v;
}

// ---- 3 ---------------------------------------------------------------------

Verdict mdd_algebra() {
  const auto t0 = Clock::now();
  Verdict v;
  Rng rng(3);
  long violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Shape s{1 + static_cast<int>(rng.below(2)), 3, 2 + static_cast<int>(rng.below(5)), 2 + static_cast<int>(rng.below(5))};
    const Tensor4 a = random_tensor(s, rng, 0.0, 1.0);
    const Tensor4 b = random_tensor(s, rng, 0.0, 1.0);
    const Tensor4 delta = mdd::raw_difference(a, b);
    const auto f = mdd::polarity_decompose(delta);
    for (std::size_t i = 0; i < delta.size(); ++i) {
      if (std::min(f.plus[i], f.minus[i]) != 0.0) ++violations;
      if (f.plus[i] - f.minus[i] != delta[i]) ++violations;
    }
    const mdd::AttentionParams p{rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0), 1e-6};
    Tensor4 neg = delta;
    for (auto& x : neg.data()) x = -x;
    const Tensor4 att = mdd::attention_map(delta, p);
    if (!(att == mdd::attention_map(neg, p))) ++violations;
    for (const double x : att.values()) {
      if (!(x > 0.0 && x < 1.0)) ++violations;
    }
  }
  v.require(violations == 0, std::to_string(violations) + " algebra violations");

  // m(beta) < 0 for beta < 0 and |x| cannot equal it, so only beta >= 0 has a centre.
  for (const double beta : {0.0, 0.2, 0.9}) {
    const double at_center = mdd::attention_map(Tensor4::scalar(mdd::center(beta)), {0.8, beta, 1e-6})[0];
    v.require(std::abs(at_center - 0.5) < 1e-12, "A(m(beta)) = " + std::to_string(at_center));
  }
  const double saturated = mdd::attention_map(Tensor4::scalar(0.5), {10.0, 0.0, 1e-6})[0];
  const double k = 5.0 / (0.45 * std::tanh(10.0) + 1e-6);
  v.require(std::abs(saturated - 1.0 / (1.0 + std::exp(-0.5 * k))) < 1e-15, "A(0.5; alpha=10) off the closed form");
  v.require(std::abs(saturated - 0.99617) < 5e-5, "A(0.5; alpha=10) = " + std::to_string(saturated));

  const double secs = seconds_since(t0);
  v.require(secs < 10.0, "took " + std::to_string(secs) + " s");
  if (v.pass) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "1000 tensors, A(0.5; alpha=10, beta=0) = %.5f, %.2f s", saturated, secs);
    v.detail = buf;
  }
  return v;
}

// ---- 4 ---------------------------------------------------------------------

Tensor4 run_heatmaps(const ModelState& state, const ModelConfig& cfg, const mdd::FrameTriplet& t,
                     const ForwardOptions& opts, Tensor4* draft_sigmoid) {
  Tape tape;
  ForwardContext ctx{tape, state, Mode::infer, {}};
  const auto r = forward(ctx, cfg, tape.input(t.prev), tape.input(t.curr), tape.input(t.next), opts);
  if (draft_sigmoid != nullptr) *draft_sigmoid = tape.value(ops::sigmoid(tape, r.draft));
  return tape.value(r.heatmaps);
}

Verdict rstr_modes() {
  const auto t0 = Clock::now();
  Verdict v;
  Rng rng(4);
  int mismatches = 0;
  int cold_mismatches = 0;
  for (const Variant variant : {Variant::v5, Variant::v2_rstr}) {
    ModelConfig cfg;
    cfg.variant = variant;
    cfg.tsatt.mask_rate = 0.0;
    const ModelState fresh = init_model(cfg, 4);
    // Non-trivial head so the mode comparison exercises the residual path.
    ModelState trained = fresh;
    for (auto& x : trained.value("rstr.tsatt.head.weight").data()) x = rng.uniform(-0.2, 0.2);
    for (int i = 0; i < 50; ++i) {
      const Shape s{1, 3, cfg.height, cfg.width};
      const mdd::FrameTriplet t{random_tensor(s, rng, 0, 1), random_tensor(s, rng, 0, 1), random_tensor(s, rng, 0, 1)};
      ForwardOptions train;
      train.head_mode = Mode::train;
      train.mask_seed = rng.next();
      if (!(run_heatmaps(trained, cfg, t, train, nullptr) == run_heatmaps(trained, cfg, t, {}, nullptr))) ++mismatches;
      Tensor4 sig;
      if (!(run_heatmaps(fresh, cfg, t, {}, &sig) == sig)) ++cold_mismatches;
    }
  }
  v.require(mismatches == 0, std::to_string(mismatches) + "/100 train/infer mismatches");
  v.require(cold_mismatches == 0, std::to_string(cold_mismatches) + "/100 cold-start mismatches");
  const double secs = seconds_since(t0);
  v.require(secs < 30.0, "took " + std::to_string(secs) + " s");
  if (v.pass) v.detail = "100 inputs exact in both checks, " + std::to_string(secs).substr(0, 4) + " s";
  return v;
}

// ---- 5 ---------------------------------------------------------------------

Verdict shape_contract() {
  const auto t0 = Clock::now();
  Verdict v;
  synth::SceneConfig scene;
  scene.frames = 5;
  const auto data = synth::generate_split(scene, synth::Split::val, 1);
  for (const Variant variant : {Variant::v2, Variant::v4like, Variant::v2_mdd, Variant::v2_rstr, Variant::v5}) {
    ModelConfig cfg;
    cfg.variant = variant;
    const ModelState state = init_model(cfg, 0);
    const auto& f = data[0].frames;
    Tape tape;
    ForwardContext ctx{tape, state, Mode::infer, {}};
    const auto r = forward(ctx, cfg, tape.input(f[0].image), tape.input(f[1].image), tape.input(f[2].image), {});
    const int expected = (variant == Variant::v2 || variant == Variant::v2_rstr) ? 9 : 13;
    const int got = tape.value(r.input).shape().c;
    v.require(got == expected, std::string(to_string(variant)) + " builds " + std::to_string(got) + " channels");
    v.require(tape.value(r.heatmaps).shape() == (Shape{1, 3, cfg.height, cfg.width}),
              std::string(to_string(variant)) + " heatmaps " + tape.value(r.heatmaps).shape().str());
    int frames_seen = 0;
    pipeline::for_each_heatmap(state, cfg, data, [&](int, int, const Tensor4& h) {
      ++frames_seen;
      v.require(h.shape() == (Shape{1, 1, scene.height, scene.width}), "pipeline heatmap " + h.shape().str());
    });
    v.require(frames_seen == scene.frames, "pipeline covered " + std::to_string(frames_seen) + " frames");
  }
  for (const int p : {4, 8, 16}) {
    rstr::TsattConfig t;
    t.patch = p;
    v.require(t.token_count(48, 64) == 3 * (48 / p) * (64 / p), "token count for patch " + std::to_string(p));
    // The count the head actually attends over: patchified draft tokens.
    Tape tape;
    const Var tokens = ops::patchify(tape, tape.input(Tensor4(Shape{1, 3, 48, 64})), p);
    const Shape s = tape.value(tokens).shape();
    v.require(s.c * s.h == t.token_count(48, 64), "patchified token count for patch " + std::to_string(p));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 5.0, "took " + std::to_string(secs) + " s");
  if (v.pass) v.detail = "5 variants, 3 patch sizes";
  return v;
}

// ---- 6 ---------------------------------------------------------------------

Verdict gt_and_loss() {
  Verdict v;
  const Tensor4 disk = supervision::make_gt_heatmap({20, 20, 2.0, true}, 40, 40);
  double ones = 0.0;
  for (const double x : disk.values()) ones += x;
  v.require(ones == 13.0, "r=2 disk has " + std::to_string(ones) + " pixels");
  const double l = supervision::wbce_loss(Tensor4::scalar(0.5), Tensor4::scalar(1.0)).loss;
  v.require(std::abs(l - 0.25 * std::log(2.0)) <= 1e-9, "WBCE(0.5, 1) = " + std::to_string(l));
  const train::TrainConfig cfg;
  const double lr0 = train::lr_at_epoch(cfg, 0), lr20 = train::lr_at_epoch(cfg, 20), lr25 = train::lr_at_epoch(cfg, 25);
  v.require(std::abs(lr0 - 1e-4) < 1e-18 && std::abs(lr20 - 1e-5) < 1e-18 && std::abs(lr25 - 1e-6) < 1e-18,
            "schedule gives " + std::to_string(lr0) + "/" + std::to_string(lr20) + "/" + std::to_string(lr25));
  if (v.pass) v.detail = "13 pixels, WBCE = 0.25 ln 2, lr 1e-4/1e-5/1e-6";
  return v;
}

// ---- 7-9 -------------------------------------------------------------------

// Desk-scale protocol. One epoch visits every third overlapping window, with
// the offset rotating each epoch, so three epochs cover the training set once.
// The ablation gives every variant the same, longer budget.
constexpr int kDeskEpochs = 15;
constexpr int kAblationEpochs = 30;
constexpr int kAblationSeeds = 3;
constexpr int kAblationValSequences = 6;

train::TrainConfig desk_train_config(std::uint64_t seed, int epochs) {
  train::TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = epochs;
  cfg.milestones = {epochs * 2 / 3, epochs * 13 / 15};
  cfg.window_stride = 3;
  cfg.seed = seed;
  return cfg;
}

struct RunRecord {
  std::vector<train::StepRecord> log;
  std::vector<eval::ConfusionCounts> per_epoch;  // validation counts after each epoch
  eval::ConfusionCounts final_counts;            // on the run's evaluation split
  double seconds = 0.0;
  bool diverged = false;
  std::string message;
};

struct RunKey {
  std::string purpose;  // "desk" (criterion 7) or "ablation" (criterion 8)
  Variant variant;
  std::uint64_t seed;
  auto operator<=>(const RunKey&) const = default;
};

class Trainer {
 public:
  explicit Trainer(fs::path work) : work_(std::move(work)) { fs::create_directories(work_); }

  const RunRecord& get(const RunKey& key) {
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, run(key)).first;
    return it->second;
  }

  [[nodiscard]] const std::map<RunKey, RunRecord>& cached() const { return cache_; }

  RunRecord run(const RunKey& key) {
    synth::SceneConfig scene;
    scene.seed = key.seed;
    const auto train_data = synth::generate_split(scene, synth::Split::train);
    const int val_count = key.purpose == "desk" ? scene.val_sequences : kAblationValSequences;
    const auto val_data = synth::generate_split(scene, synth::Split::val, val_count);

    ModelConfig model;
    model.variant = key.variant;
    const auto cfg = desk_train_config(key.seed, key.purpose == "desk" ? kDeskEpochs : kAblationEpochs);
    RunRecord rec;
    const auto t0 = Clock::now();
    train::FitHooks hooks;
    const bool per_epoch = key.purpose == "desk";
    hooks.on_epoch_end = [&](int, const ModelState& s) {
      if (per_epoch) rec.per_epoch.push_back(pipeline::evaluate(s, model, val_data, {}).counts);
    };
    const auto res = train::fit(model, init_model(model, key.seed), train_data, cfg, hooks);
    rec.log = res.log;
    rec.diverged = res.diverged;
    rec.message = res.message;
    rec.final_counts = per_epoch && !rec.per_epoch.empty() ? rec.per_epoch.back()
                                                           : pipeline::evaluate(res.state, model, val_data, {}).counts;
    rec.seconds = seconds_since(t0);

    const auto m = eval::compute_metrics(rec.final_counts);
    const auto& c = rec.final_counts;
    note("%s %-7s seed %llu: F1 %.4f R %.4f TP %ld FP1 %ld FP2 %ld TN %ld FN %ld (%.0f s)%s", key.purpose.c_str(),
         std::string(to_string(key.variant)).c_str(), static_cast<unsigned long long>(key.seed), m.f1, m.recall, c.tp,
         c.fp1, c.fp2, c.tn, c.fn, rec.seconds, rec.diverged ? " DIVERGED" : "");
    write_log(key, rec);
    return rec;
  }

 private:
  void write_log(const RunKey& key, const RunRecord& rec) const {
    std::ofstream os(work_ / (key.purpose + "_" + std::string(to_string(key.variant)) + "_seed" +
                              std::to_string(key.seed) + "_loss.csv"));
    os << "epoch,step,lr,loss\n";
    char buf[96];
    for (const auto& s : rec.log) {
      std::snprintf(buf, sizeof buf, "%d,%llu,%.17g,%.17g\n", s.epoch, static_cast<unsigned long long>(s.step), s.lr,
                    s.loss);
      os << buf;
    }
  }

  fs::path work_;
  std::map<RunKey, RunRecord> cache_;
};

Verdict desk_training(Trainer& trainer) {
  Verdict v;
  const auto& v5 = trainer.get({"desk", Variant::v5, 0});
  const auto& v2 = trainer.get({"desk", Variant::v2, 0});
  v.require(!v5.diverged && !v2.diverged, "training diverged: " + v5.message + v2.message);
  int first_epoch = -1;
  double best = 0.0;
  for (std::size_t e = 0; e < v5.per_epoch.size(); ++e) {
    const double f1 = eval::compute_metrics(v5.per_epoch[e]).f1;
    best = std::max(best, f1);
    if (first_epoch < 0 && f1 >= 0.90) first_epoch = static_cast<int>(e) + 1;
  }
  v.require(first_epoch > 0, "v5 best F1 " + std::to_string(best) + " < 0.90");
  const double r5 = eval::compute_metrics(v5.final_counts).recall;
  const double r2 = eval::compute_metrics(v2.final_counts).recall;
  v.require(r5 > r2, "v5 recall " + std::to_string(r5) + " not above v2 recall " + std::to_string(r2));
  char buf[200];
  std::snprintf(buf, sizeof buf, "v5 F1 >= 0.90 at epoch %d; recall v5 %.4f vs v2 %.4f; %.0f s", first_epoch, r5, r2,
                v5.seconds + v2.seconds);
  if (v.pass) v.detail = buf;
  return v;
}

Verdict ablation(Trainer& trainer) {
  Verdict v;
  int majority = 0;
  std::string summary;
  for (std::uint64_t seed = 0; seed < kAblationSeeds; ++seed) {
    const auto& v2 = trainer.get({"ablation", Variant::v2, seed}).final_counts;
    const auto& v2r = trainer.get({"ablation", Variant::v2_rstr, seed}).final_counts;
    const auto& v5 = trainer.get({"ablation", Variant::v5, seed}).final_counts;
    const bool ok = v2r.fn < v2.fn && v5.fn < v2.fn && static_cast<double>(v5.fp()) <= 1.1 * v2r.fp();
    majority += ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%sseed %llu FN %ld/%ld/%ld FP(v2_rstr, v5) %ld/%ld %s", summary.empty() ? "" : "; ",
                  static_cast<unsigned long long>(seed), v2.fn, v2r.fn, v5.fn, v2r.fp(), v5.fp(), ok ? "ok" : "no");
    summary += buf;
  }
  v.require(2 * majority > kAblationSeeds, "holds for " + std::to_string(majority) + "/3 seeds");
  v.detail = v.pass ? "FN v2/v2_rstr/v5: " + summary : v.detail + " (" + summary + ")";
  return v;
}

Verdict determinism(Trainer& trainer) {
  Verdict v;
  if (trainer.cached().empty()) {
    // Run on its own: reproduce the full 7-8 protocol first.
    (void)desk_training(trainer);
    (void)ablation(trainer);
  }
  int compared = 0;
  for (const auto& [key, first] : trainer.cached()) {
    const RunRecord again = trainer.run(key);
    const std::string name = key.purpose + "/" + std::string(to_string(key.variant)) + "/" + std::to_string(key.seed);
    bool same_log = first.log.size() == again.log.size();
    for (std::size_t i = 0; same_log && i < first.log.size(); ++i) {
      same_log = first.log[i].loss == again.log[i].loss && first.log[i].lr == again.log[i].lr &&
                 first.log[i].step == again.log[i].step;
    }
    v.require(same_log, name + " loss log differs");
    v.require(first.final_counts == again.final_counts && first.per_epoch == again.per_epoch,
              name + " confusion counts differ");
    ++compared;
  }
  if (v.pass) v.detail = std::to_string(compared) + " runs repeated with bit-identical loss logs and counts";
  return v;
}

std::set<int> parse_criteria(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const int n = std::stoi(item);
    if (n < 1 || n > 9) throw std::invalid_argument("criterion out of range: " + item);
    out.insert(n);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected{1, 2, 3, 4, 5, 6, 7, 8, 9};
  fs::path work = fs::temp_directory_path() / "tracknet_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criteria" && i + 1 < argc) {
      selected = parse_criteria(argv[++i]);
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--criteria 1,2,...] [--work DIR]\n", argv[0]);
      return 2;
    }
  }

  Trainer trainer(work);
  const std::map<int, std::pair<const char*, std::function<Verdict()>>> criteria{
      {1, {"metric oracle", metric_oracle}},
      {2, {"gradient suite", gradient_suite}},
      {3, {"motion decoupling algebra", mdd_algebra}},
      {4, {"refinement mode consistency", rstr_modes}},
      {5, {"channel and shape contract", shape_contract}},
      {6, {"ground truth and loss", gt_and_loss}},
      {7, {"desk-scale training", [&] { return desk_training(trainer); }}},
      {8, {"ablation ordering", [&] { return ablation(trainer); }}},
      {9, {"determinism", [&] { return determinism(trainer); }}},
  };

  std::vector<std::string> lines;
  bool all = true;
  for (const int n : selected) {
    const auto& [name, fn] = criteria.at(n);
    std::printf("running criterion %d (%s)\n", n, name);
    std::fflush(stdout);
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    all = all && v.pass;
    char head[96];
    std::snprintf(head, sizeof head, "criterion %d %s: %s", n, name, v.pass ? "PASS" : "FAIL");
    lines.push_back(std::string(head) + " (" + v.detail + ")");
  }
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  return all ? 0 : 1;
}
