#include "tracknet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace tracknet::checkpoint {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "tracknet-checkpoint";

std::uint64_t to_little(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::little) return bits;
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xFFu) << (8 * (7 - i));
  return out;
}

void put_doubles(std::ostream& os, std::span<const double> xs) {
  std::vector<std::uint64_t> raw(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) raw[i] = to_little(std::bit_cast<std::uint64_t>(xs[i]));
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
}

void get_doubles(std::istream& is, std::span<double> xs, const fs::path& path) {
  std::vector<std::uint64_t> raw(xs.size());
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
  if (is.gcount() != static_cast<std::streamsize>(raw.size() * 8)) {
    throw std::runtime_error(path.string() + ": truncated parameter data");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = std::bit_cast<double>(to_little(raw[i]));
}

std::string shape_text(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

fs::path data_path(const fs::path& manifest) { return fs::path(manifest.string() + ".bin"); }

}  // namespace

void save(const fs::path& manifest, const RunConfig& config, const ModelState& state) {
  if (manifest.has_parent_path()) fs::create_directories(manifest.parent_path());
  std::ofstream bin(data_path(manifest), std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + data_path(manifest).string());
  std::ofstream os(manifest);
  if (!os) throw std::runtime_error("cannot write " + manifest.string());

  os << "format=" << kFormat << "\nversion=" << kVersion << "\ndata=" << data_path(manifest).filename().string()
     << "\nstep=" << state.step << "\nparams=" << state.entries().size() << '\n';
  for (const auto& [k, v] : to_key_values(config)) os << "config." << k << '=' << v << '\n';
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < state.entries().size(); ++i) {
    const auto& e = state.entries()[i];
    const std::string p = "param." + std::to_string(i) + ".";
    os << p << "name=" << e.name << '\n'
       << p << "group=" << to_string(e.group) << '\n'
       << p << "shape=" << shape_text(e.value.shape()) << '\n'
       << p << "offset=" << offset << '\n';
    put_doubles(bin, e.value.data());
    put_doubles(bin, e.m.data());
    put_doubles(bin, e.v.data());
    offset += 3 * e.value.size() * sizeof(double);
  }
  if (!os || !bin) throw std::runtime_error("failed writing checkpoint " + manifest.string());
}

Loaded load(const fs::path& manifest) {
  std::ifstream is(manifest);
  if (!is) throw std::runtime_error("checkpoint not found: " + manifest.string());
  std::stringstream ss;
  ss << is.rdbuf();
  std::map<std::string, std::string> kv;
  RunConfig config;
  for (const auto& [k, v] : parse_key_values(ss.str(), manifest.string())) {
    if (k.rfind("config.", 0) == 0) set_config_value(config, k.substr(7), v);
    else kv[k] = v;
  }
  const auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(manifest.string() + ": missing '" + key + "'");
    return it->second;
  };
  if (need("format") != kFormat) throw std::runtime_error(manifest.string() + ": not a tracknet checkpoint");
  if (std::stoi(need("version")) != kVersion) {
    throw std::runtime_error(manifest.string() + ": unsupported checkpoint version " + need("version"));
  }

  Loaded out{config, init_model(config.model, 0)};
  out.state.step = std::stoull(need("step"));
  const std::size_t count = std::stoul(need("params"));
  if (count != out.state.entries().size()) {
    throw std::runtime_error(manifest.string() + ": stores " + std::to_string(count) + " tensors, model has " +
                             std::to_string(out.state.entries().size()));
  }
  const fs::path bin_path = manifest.parent_path() / need("data");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("checkpoint data not found: " + bin_path.string());
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < count; ++i) {
    auto& e = out.state.entries()[i];
    const std::string p = "param." + std::to_string(i) + ".";
    if (need(p + "name") != e.name) {
      throw std::runtime_error(manifest.string() + ": tensor " + std::to_string(i) + " is '" + need(p + "name") +
                               "', expected '" + e.name + "'");
    }
    if (need(p + "shape") != shape_text(e.value.shape())) {
      throw std::runtime_error(manifest.string() + ": '" + e.name + "' has shape " + need(p + "shape") +
                               ", model expects " + shape_text(e.value.shape()));
    }
    if (param_group_from_string(need(p + "group")) != e.group) {
      throw std::runtime_error(manifest.string() + ": '" + e.name + "' group mismatch");
    }
    if (std::stoull(need(p + "offset")) != offset) {
      throw std::runtime_error(manifest.string() + ": '" + e.name + "' offset mismatch");
    }
    get_doubles(bin, e.value.data(), bin_path);
    get_doubles(bin, e.m.data(), bin_path);
    get_doubles(bin, e.v.data(), bin_path);
    offset += 3 * e.value.size() * sizeof(double);
  }
  return out;
}

}  // namespace tracknet::checkpoint
