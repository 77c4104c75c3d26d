#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tracknet/evalkit.hpp"
#include "tracknet/model.hpp"
#include "tracknet/synthgen.hpp"
#include "tracknet/trainkit.hpp"

namespace tracknet {

/// Every setting of a run. Keys are dotted (model.variant, train.lr,
/// tsatt.patch, scene.frames, ...); see config_keys() for the full list.
struct RunConfig {
  ModelConfig model;
  train::TrainConfig train;
  eval::EvalConfig eval;
  synth::SceneConfig scene;
  std::uint64_t seed = 0;
  std::string data;
  std::string out = "out";
  std::string checkpoint;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// All recognised keys in a stable order.
std::vector<std::string> config_keys();

/// Throws ConfigError for an unknown key or an unparsable value.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& cfg, std::string_view key);

/// key=value lines; '#' starts a comment; blank lines are ignored.
KeyValues parse_key_values(std::string_view text, std::string_view source = "<config>");
KeyValues read_config_file(const std::filesystem::path& path);

void apply_key_values(RunConfig& cfg, const KeyValues& kv);
/// Every key with its current value.
KeyValues to_key_values(const RunConfig& cfg);

/// Checks every sub-config.
void validate(const RunConfig& cfg);

}  // namespace tracknet
