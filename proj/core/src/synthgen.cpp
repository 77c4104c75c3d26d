#include "tracknet/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tracknet/random.hpp"

namespace tracknet::synth {

namespace fs = std::filesystem;

bool Occluder::covers(double x, double y, int frame) const {
  const double ox = x0 + vx * frame;
  const double oy = y0 + vy * frame;
  return x >= ox && x <= ox + w && y >= oy && y <= oy + h;
}

void validate(const SceneConfig& cfg) {
  if (cfg.width <= 0 || cfg.height <= 0) throw std::invalid_argument("scene: resolution must be positive");
  if (cfg.frames < 3) throw std::invalid_argument("scene: need at least 3 frames per sequence");
  if (!(cfg.ball_radius > 0.0)) throw std::invalid_argument("scene: ball radius must be positive");
  if (cfg.ball_radius >= std::min(cfg.width, cfg.height) / 2.0) {
    throw std::invalid_argument("scene: ball radius " + std::to_string(cfg.ball_radius) +
                                " must be below half the smaller image side");
  }
  if (cfg.speed_min < 0.0 || cfg.speed_max < cfg.speed_min) throw std::invalid_argument("scene: bad speed range");
  if (cfg.faint_prob < 0.0 || cfg.faint_prob > 1.0) throw std::invalid_argument("scene: faint_prob must be in [0, 1]");
  if (cfg.noise_sigma < 0.0) throw std::invalid_argument("scene: noise_sigma must be nonnegative");
  if (cfg.scheduled_crossings < 0 || cfg.distractors < 0 || cfg.clutter < 0) throw std::invalid_argument("scene: negative counts");
  if (cfg.train_sequences < 0 || cfg.val_sequences < 0) throw std::invalid_argument("scene: negative sequence count");
}

namespace {

// Independent streams so that the layout can be redrawn without replaying
// the per-frame noise.
enum Stream : std::uint64_t { layout_stream = 1, motion_stream = 2, occluder_stream = 3, frame_stream = 4 };

struct Patch {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  Color color{};
};

struct Layout {
  Color background{};
  std::vector<Patch> clutter;
  std::vector<Vec2> distractors;
};

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

Layout draw_layout(const SceneConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, layout_stream));
  Layout l;
  for (int c = 0; c < 3; ++c) l.background[c] = std::clamp(cfg.background[c] + rng.uniform(-0.1, 0.1), 0.0, 1.0);
  for (int i = 0; i < cfg.clutter; ++i) {
    Patch p;
    p.x0 = static_cast<int>(rng.below(cfg.width));
    p.y0 = static_cast<int>(rng.below(cfg.height));
    p.x1 = std::min(cfg.width - 1, p.x0 + 2 + static_cast<int>(rng.below(10)));
    p.y1 = std::min(cfg.height - 1, p.y0 + 2 + static_cast<int>(rng.below(10)));
    for (int c = 0; c < 3; ++c) p.color[c] = std::clamp(l.background[c] + rng.uniform(-0.2, 0.2), 0.0, 1.0);
    l.clutter.push_back(p);
  }
  const double r = cfg.ball_radius;
  for (int i = 0; i < cfg.distractors; ++i) {
    const double x = rng.uniform(r, cfg.width - 1 - r);
    const double y = rng.uniform(r, cfg.height - 1 - r);
    l.distractors.push_back({x, y});
  }
  return l;
}

// Fraction of the pixel square around (px, py) inside the disk, 4x4 samples.
double coverage(int px, int py, double cx, double cy, double r) {
  const double r2 = r * r;
  int inside = 0;
  for (int sy = 0; sy < 4; ++sy) {
    for (int sx = 0; sx < 4; ++sx) {
      const double dx = px - 0.5 + (sx + 0.5) / 4.0 - cx;
      const double dy = py - 0.5 + (sy + 0.5) / 4.0 - cy;
      if (dx * dx + dy * dy <= r2) ++inside;
    }
  }
  return inside / 16.0;
}

void draw_disk(Tensor4& img, double cx, double cy, double r, const Color& color, double contrast) {
  const Shape s = img.shape();
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - r - 1)));
  const int x1 = std::min(s.w - 1, static_cast<int>(std::ceil(cx + r + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - r - 1)));
  const int y1 = std::min(s.h - 1, static_cast<int>(std::ceil(cy + r + 1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double a = coverage(x, y, cx, cy, r) * contrast;
      if (a == 0.0) continue;
      for (int c = 0; c < 3; ++c) {
        double& v = img.at(0, c, y, x);
        v += a * (color[c] - v);
      }
    }
  }
}

Tensor4 render_base(const SceneConfig& cfg, const Layout& layout, double cx, double cy, double contrast) {
  Tensor4 img(Shape{1, 3, cfg.height, cfg.width});
  const std::size_t plane = static_cast<std::size_t>(cfg.height) * cfg.width;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane; ++i) img[c * plane + i] = layout.background[c];
  }
  for (const auto& p : layout.clutter) {
    for (int y = p.y0; y <= p.y1; ++y) {
      for (int x = p.x0; x <= p.x1; ++x) {
        for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = p.color[c];
      }
    }
  }
  for (const auto& d : layout.distractors) draw_disk(img, d.x, d.y, cfg.ball_radius, cfg.ball_color, 1.0);
  draw_disk(img, cx, cy, cfg.ball_radius, cfg.ball_color, contrast);
  return img;
}

void reflect(double& p, double& v, double lo, double hi) {
  p += v;
  for (int guard = 0; guard < 64 && (p < lo || p > hi); ++guard) {
    if (p > hi) {
      p = 2 * hi - p;
      v = -v;
    } else {
      p = 2 * lo - p;
      v = -v;
    }
  }
  if (hi <= lo) p = lo;
}

struct Motion {
  Vec2 start;
  Vec2 velocity;
};

Motion draw_motion(const SceneConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, motion_stream));
  const double r = cfg.ball_radius;
  Motion m;
  m.start = {rng.uniform(r, cfg.width - 1 - r), rng.uniform(r, cfg.height - 1 - r)};
  const double angle = rng.uniform(0.0, 6.283185307179586);
  const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
  m.velocity = {speed * std::cos(angle), speed * std::sin(angle)};
  if (cfg.start_position) m.start = *cfg.start_position;
  if (cfg.start_velocity) m.velocity = *cfg.start_velocity;
  return m;
}

std::vector<Occluder> schedule_occluders(const SceneConfig& cfg, const std::vector<Vec2>& path) {
  std::vector<Occluder> out = cfg.occluders;
  Rng rng(mix_seed(cfg.seed, occluder_stream));
  const int k = cfg.scheduled_crossings;
  for (int i = 0; i < k; ++i) {
    const double slot = static_cast<double>(cfg.frames) / k;
    const int jitter = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1.0, slot / 2))));
    const int t = std::clamp(static_cast<int>(slot * i + slot / 4) + jitter, 0, cfg.frames - 1);
    const double angle = rng.uniform(0.0, 6.283185307179586);
    Occluder o;
    o.w = cfg.occluder_size * rng.uniform(0.8, 1.2);
    o.h = cfg.occluder_size * rng.uniform(0.8, 1.2);
    o.vx = cfg.occluder_speed * std::cos(angle);
    o.vy = cfg.occluder_speed * std::sin(angle);
    o.x0 = path[t].x - o.w / 2 - o.vx * t;
    o.y0 = path[t].y - o.h / 2 - o.vy * t;
    const double shade = rng.uniform(0.35, 0.6);
    o.color = {shade, shade, shade};
    out.push_back(o);
  }
  return out;
}

void draw_occluder(Tensor4& img, const Occluder& o, int frame) {
  const Shape s = img.shape();
  const double ox = o.x0 + o.vx * frame;
  const double oy = o.y0 + o.vy * frame;
  const int x0 = std::max(0, static_cast<int>(std::ceil(ox)));
  const int x1 = std::min(s.w - 1, static_cast<int>(std::floor(ox + o.w)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(oy)));
  const int y1 = std::min(s.h - 1, static_cast<int>(std::floor(oy + o.h)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = o.color[c];
    }
  }
}

}  // namespace

std::vector<Vec2> simulate_trajectory(const SceneConfig& cfg, Vec2 start, Vec2 velocity) {
  const double r = cfg.ball_radius;
  std::vector<Vec2> path;
  path.reserve(cfg.frames);
  Vec2 p = start;
  Vec2 v = velocity;
  for (int t = 0; t < cfg.frames; ++t) {
    if (t > 0) {
      reflect(p.x, v.x, r, cfg.width - 1 - r);
      reflect(p.y, v.y, r, cfg.height - 1 - r);
    }
    path.push_back(p);
  }
  return path;
}

std::vector<Occluder> sequence_occluders(const SceneConfig& cfg) {
  validate(cfg);
  const Motion m = draw_motion(cfg);
  return schedule_occluders(cfg, simulate_trajectory(cfg, m.start, m.velocity));
}

Tensor4 render_clean(const SceneConfig& cfg, double cx, double cy, double contrast) {
  validate(cfg);
  Tensor4 img = render_base(cfg, draw_layout(cfg), cx, cy, contrast);
  for (auto& v : img.data()) v = quantize(v);
  return img;
}

std::vector<LabeledFrame> generate_sequence(const SceneConfig& cfg) {
  validate(cfg);
  const Layout layout = draw_layout(cfg);
  const Motion motion = draw_motion(cfg);
  const auto path = simulate_trajectory(cfg, motion.start, motion.velocity);
  const auto occluders = schedule_occluders(cfg, path);
  Rng rng(mix_seed(cfg.seed, frame_stream));

  std::vector<LabeledFrame> frames;
  frames.reserve(cfg.frames);
  for (int t = 0; t < cfg.frames; ++t) {
    LabeledFrame f;
    f.x = path[t].x;
    f.y = path[t].y;
    f.contrast = rng.uniform() < cfg.faint_prob ? cfg.faint_contrast : 1.0;
    f.image = render_base(cfg, layout, f.x, f.y, f.contrast);
    f.visible = true;
    for (const auto& o : occluders) {
      draw_occluder(f.image, o, t);
      if (o.covers(f.x, f.y, t)) f.visible = false;
    }
    for (auto& v : f.image.data()) {
      if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * rng.normal();
      v = quantize(v);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<Sequence> generate_split(const SceneConfig& cfg, Split split, int count) {
  const int first = split == Split::train ? 0 : cfg.train_sequences;
  const int n = count >= 0 ? count : (split == Split::train ? cfg.train_sequences : cfg.val_sequences);
  std::vector<Sequence> out;
  for (int i = 0; i < n; ++i) {
    SceneConfig c = cfg;
    c.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(first + i));
    char name[32];
    std::snprintf(name, sizeof name, "seq_%03d", first + i);
    out.push_back({name, generate_sequence(c)});
  }
  return out;
}

// ---- file formats ----------------------------------------------------------

namespace {

std::string format_coord(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const fs::path& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(where.string() + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Next whitespace-separated header token, skipping '#' comments.
std::string header_token(std::istream& is) {
  std::string tok;
  while (is >> tok) {
    if (tok[0] != '#') return tok;
    std::string rest;
    std::getline(is, rest);
  }
  return {};
}

void write_netpbm(const fs::path& path, const char* magic, const Tensor4& img, int channels) {
  const Shape s = img.shape();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << magic << '\n' << s.w << ' ' << s.h << "\n255\n";
  std::vector<unsigned char> bytes(static_cast<std::size_t>(s.w) * s.h * channels);
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp(img.at(0, c, y, x), 0.0, 1.0);
        bytes[(static_cast<std::size_t>(y) * s.w + x) * channels + c] = static_cast<unsigned char>(std::lround(v * 255));
      }
    }
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_ppm(const fs::path& path, const Tensor4& image) {
  if (image.shape().n != 1 || image.shape().c != 3) throw TensorError("write_ppm: expected (1, 3, H, W), got " + image.shape().str());
  write_netpbm(path, "P6", image, 3);
}

void write_pgm(const fs::path& path, const Tensor4& plane) {
  if (plane.shape().n * plane.shape().c != 1) throw TensorError("write_pgm: expected one plane, got " + plane.shape().str());
  write_netpbm(path, "P5", plane, 1);
}

Tensor4 read_ppm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  if (header_token(is) != "P6") throw std::runtime_error(path.string() + ": not a binary PPM (P6)");
  const int w = std::stoi(header_token(is));
  const int h = std::stoi(header_token(is));
  const int maxval = std::stoi(header_token(is));
  if (w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error(path.string() + ": unsupported PPM header");
  is.get();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (is.gcount() != static_cast<std::streamsize>(bytes.size())) throw std::runtime_error(path.string() + ": truncated");
  Tensor4 img(Shape{1, 3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = bytes[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
    }
  }
  return img;
}

std::vector<ManifestEntry> write_dataset(const std::vector<Sequence>& sequences, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create " + root.string() + ": " + ec.message());
  std::vector<ManifestEntry> manifest;
  for (const auto& seq : sequences) {
    const fs::path dir = root / seq.name;
    fs::create_directories(dir / "frames", ec);
    if (ec) throw std::runtime_error("cannot create " + (dir / "frames").string() + ": " + ec.message());
    std::ofstream labels(dir / "labels.csv");
    if (!labels) throw std::runtime_error("cannot write " + (dir / "labels.csv").string());
    labels << "frame,visibility,x,y\n";
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      const auto& f = seq.frames[k];
      char file[32];
      std::snprintf(file, sizeof file, "%06zu.ppm", k);
      write_ppm(dir / "frames" / file, f.image);
      labels << k << ',' << (f.visible ? 1 : 0) << ',';
      if (f.visible) labels << format_coord(f.x) << ',' << format_coord(f.y);
      else labels << ',';
      labels << '\n';
    }
    manifest.push_back({seq.name, static_cast<int>(seq.frames.size())});
  }
  std::ofstream m(root / "manifest.csv");
  if (!m) throw std::runtime_error("cannot write " + (root / "manifest.csv").string());
  m << "sequence,frames\n";
  for (const auto& e : manifest) m << e.name << ',' << e.frames << '\n';
  return manifest;
}

namespace {

Sequence read_sequence(const fs::path& dir) {
  Sequence seq;
  seq.name = dir.filename().string();
  const fs::path csv = dir / "labels.csv";
  std::ifstream is(csv);
  if (!is) throw std::runtime_error("cannot open " + csv.string());
  std::string line;
  std::getline(is, line);
  if (line.rfind("frame,visibility,x,y", 0) != 0) throw std::runtime_error(csv.string() + ": unexpected header");
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw std::runtime_error(csv.string() + ": malformed row '" + line + "'");
    const int k = static_cast<int>(parse_double(cells[0], csv));
    if (k != static_cast<int>(seq.frames.size())) throw std::runtime_error(csv.string() + ": frames out of order");
    LabeledFrame f;
    f.visible = cells[1] == "1";
    if (f.visible) {
      f.x = parse_double(cells[2], csv);
      f.y = parse_double(cells[3], csv);
    }
    char file[32];
    std::snprintf(file, sizeof file, "%06d.ppm", k);
    f.image = read_ppm(dir / "frames" / file);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

}  // namespace

std::vector<Sequence> read_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("dataset directory not found: " + root.string());
  std::vector<std::string> names;
  const fs::path manifest = root / "manifest.csv";
  if (fs::exists(manifest)) {
    std::ifstream is(manifest);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      const auto cells = split_csv(line);
      if (!cells.empty() && !cells[0].empty()) names.push_back(cells[0]);
    }
  } else {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "labels.csv")) names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
  }
  if (names.empty()) throw std::runtime_error("no sequences found under " + root.string());
  std::vector<Sequence> out;
  for (const auto& n : names) out.push_back(read_sequence(root / n));
  return out;
}

std::vector<Window> training_windows(const std::vector<Sequence>& data) {
  std::vector<Window> out;
  for (int s = 0; s < static_cast<int>(data.size()); ++s) {
    const int n = static_cast<int>(data[s].frames.size());
    for (int t = 0; t + 3 <= n; ++t) out.push_back({s, t});
  }
  return out;
}

std::vector<Window> evaluation_windows(const std::vector<Sequence>& data) {
  std::vector<Window> out;
  for (int s = 0; s < static_cast<int>(data.size()); ++s) {
    const int n = static_cast<int>(data[s].frames.size());
    if (n < 3) continue;
    int t = 0;
    for (; t + 3 <= n; t += 3) out.push_back({s, t});
    if (t < n) out.push_back({s, n - 3});
  }
  return out;
}

}  // namespace tracknet::synth
