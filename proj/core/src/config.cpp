#include "tracknet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace tracknet {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("config: '" + std::string(key) + "' expects " + std::string(expected) + ", got '" +
                    std::string(value) + "'");
}

template <class T>
T parse_number(std::string_view key, std::string_view s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) bad_value(key, s, "a number");
  return v;
}

bool parse_bool(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  bad_value(key, s, "true or false");
}

std::vector<int> parse_int_list(std::string_view key, std::string_view s) {
  std::vector<int> out;
  if (trim(s).empty()) return out;
  std::string item;
  std::istringstream is{std::string(s)};
  while (std::getline(is, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

std::string format(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
};

// `access` is a generic lambda returning a reference into the config.
template <class T, class F>
Field num(std::string key, F access) {
  return {std::move(key),
          [access](const RunConfig& c) {
            const T v = access(c);
            if constexpr (std::is_floating_point_v<T>) return format(v);
            else return std::to_string(v);
          },
          [access](RunConfig& c, std::string_view k, std::string_view v) { access(c) = parse_number<T>(k, v); }};
}

template <class F>
Field flag(std::string key, F access) {
  return {std::move(key), [access](const RunConfig& c) { return std::string(access(c) ? "true" : "false"); },
          [access](RunConfig& c, std::string_view k, std::string_view v) { access(c) = parse_bool(k, v); }};
}

template <class F>
Field text(std::string key, F access) {
  return {std::move(key), [access](const RunConfig& c) { return access(c); },
          [access](RunConfig& c, std::string_view, std::string_view v) { access(c) = std::string(v); }};
}

template <class F>
Field int_list(std::string key, F access) {
  return {std::move(key), [access](const RunConfig& c) { return format(access(c)); },
          [access](RunConfig& c, std::string_view k, std::string_view v) { access(c) = parse_int_list(k, v); }};
}

#define TN_REF(expr) [](auto& c) -> auto& { return expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(num<std::uint64_t>("seed", TN_REF(c.seed)));
    f.push_back(text("data", TN_REF(c.data)));
    f.push_back(text("out", TN_REF(c.out)));
    f.push_back(text("checkpoint", TN_REF(c.checkpoint)));
    f.push_back({"model.variant", [](const RunConfig& c) { return std::string(to_string(c.model.variant)); },
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   try {
                     c.model.variant = variant_from_string(v);
                   } catch (const std::exception&) {
                     bad_value(k, v, "one of v2, v4like, v2_mdd, v2_rstr, v5");
                   }
                 }});
    f.push_back(num<int>("model.height", TN_REF(c.model.height)));
    f.push_back(num<int>("model.width", TN_REF(c.model.width)));
    f.push_back(int_list("backbone.widths", TN_REF(c.model.backbone.widths)));
    f.push_back(num<int>("backbone.convs_per_stage", TN_REF(c.model.backbone.convs_per_stage)));
    f.push_back(num<int>("tsatt.patch", TN_REF(c.model.tsatt.patch)));
    f.push_back(num<int>("tsatt.dim", TN_REF(c.model.tsatt.dim)));
    f.push_back(num<int>("tsatt.heads", TN_REF(c.model.tsatt.heads)));
    f.push_back(num<int>("tsatt.temporal_blocks", TN_REF(c.model.tsatt.temporal_blocks)));
    f.push_back(num<int>("tsatt.spatial_blocks", TN_REF(c.model.tsatt.spatial_blocks)));
    f.push_back(flag("tsatt.temporal_first", TN_REF(c.model.tsatt.temporal_first)));
    f.push_back(num<int>("tsatt.ffn_multiplier", TN_REF(c.model.tsatt.ffn_multiplier)));
    f.push_back(num<double>("tsatt.mask_rate", TN_REF(c.model.tsatt.mask_rate)));
    f.push_back(num<double>("mdd.eps", TN_REF(c.model.mdd.eps)));
    f.push_back(num<double>("mdd.alpha_init", TN_REF(c.model.mdd.alpha_init)));
    f.push_back(num<double>("mdd.beta_init", TN_REF(c.model.mdd.beta_init)));
    f.push_back(flag("mdd.per_polarity", TN_REF(c.model.mdd.per_polarity)));
    f.push_back(num<double>("train.lr", TN_REF(c.train.lr)));
    f.push_back(num<int>("train.batch", TN_REF(c.train.batch)));
    f.push_back(num<int>("train.epochs", TN_REF(c.train.epochs)));
    f.push_back(int_list("train.milestones", TN_REF(c.train.milestones)));
    f.push_back(num<double>("train.gamma", TN_REF(c.train.gamma)));
    f.push_back(num<double>("train.weight_decay", TN_REF(c.train.weight_decay)));
    f.push_back(num<double>("train.beta1", TN_REF(c.train.beta1)));
    f.push_back(num<double>("train.beta2", TN_REF(c.train.beta2)));
    f.push_back(num<double>("train.eps", TN_REF(c.train.eps)));
    f.push_back(num<double>("train.grad_clip", TN_REF(c.train.grad_clip)));
    f.push_back(num<int>("train.window_stride", TN_REF(c.train.window_stride)));
    f.push_back(num<double>("train.gt_radius", TN_REF(c.train.gt_radius)));
    f.push_back(num<double>("eval.tolerance", TN_REF(c.eval.tolerance)));
    f.push_back(num<double>("eval.threshold", TN_REF(c.eval.threshold)));
    f.push_back(num<double>("eval.scale_x", TN_REF(c.eval.scale_x)));
    f.push_back(num<double>("eval.scale_y", TN_REF(c.eval.scale_y)));
    f.push_back(num<int>("scene.width", TN_REF(c.scene.width)));
    f.push_back(num<int>("scene.height", TN_REF(c.scene.height)));
    f.push_back(num<int>("scene.frames", TN_REF(c.scene.frames)));
    f.push_back(num<double>("scene.ball_radius", TN_REF(c.scene.ball_radius)));
    f.push_back(num<double>("scene.speed_min", TN_REF(c.scene.speed_min)));
    f.push_back(num<double>("scene.speed_max", TN_REF(c.scene.speed_max)));
    f.push_back(num<int>("scene.scheduled_crossings", TN_REF(c.scene.scheduled_crossings)));
    f.push_back(num<double>("scene.occluder_size", TN_REF(c.scene.occluder_size)));
    f.push_back(num<double>("scene.occluder_speed", TN_REF(c.scene.occluder_speed)));
    f.push_back(num<int>("scene.distractors", TN_REF(c.scene.distractors)));
    f.push_back(num<int>("scene.clutter", TN_REF(c.scene.clutter)));
    f.push_back(num<double>("scene.faint_prob", TN_REF(c.scene.faint_prob)));
    f.push_back(num<double>("scene.faint_contrast", TN_REF(c.scene.faint_contrast)));
    f.push_back(num<double>("scene.noise_sigma", TN_REF(c.scene.noise_sigma)));
    f.push_back(num<int>("scene.train_sequences", TN_REF(c.scene.train_sequences)));
    f.push_back(num<int>("scene.val_sequences", TN_REF(c.scene.val_sequences)));
    return f;
  }();
  return table;
}

#undef TN_REF

const Field& field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  field(key).set(cfg, key, trim(value));
}

std::string get_config_value(const RunConfig& cfg, std::string_view key) { return field(key).get(cfg); }

KeyValues parse_key_values(std::string_view text, std::string_view source) {
  KeyValues out;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || trim(t.substr(0, eq)).empty()) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
    }
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

void apply_key_values(RunConfig& cfg, const KeyValues& kv) {
  for (const auto& [k, v] : kv) set_config_value(cfg, k, v);
}

KeyValues to_key_values(const RunConfig& cfg) {
  KeyValues out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(cfg));
  return out;
}

void validate(const RunConfig& cfg) {
  try {
    validate(cfg.model);
    train::validate(cfg.train);
    eval::validate(cfg.eval);
    synth::validate(cfg.scene);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace tracknet
