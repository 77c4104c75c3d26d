#pragma once

#include <filesystem>

#include "tracknet/config.hpp"

/// Checkpoint = plain-text manifest (key=value: format, version, full run
/// configuration, parameter registry with shapes and byte offsets) plus a
/// little-endian flat binary of doubles. Each entry stores value, first
/// moment and second moment back to back.
namespace tracknet::checkpoint {

inline constexpr int kVersion = 1;

struct Loaded {
  RunConfig config;
  ModelState state;
};

/// Writes `manifest` and `manifest` + ".bin".
void save(const std::filesystem::path& manifest, const RunConfig& config, const ModelState& state);

/// Rebuilds the model from the stored configuration and fills it from the
/// binary, checking every parameter's name, group and shape.
Loaded load(const std::filesystem::path& manifest);

}  // namespace tracknet::checkpoint
