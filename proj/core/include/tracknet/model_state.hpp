#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tracknet/tensor.hpp"

namespace tracknet {

/// decay: trained with decoupled weight decay. no_decay: trained without it
/// (biases, normalization affine terms, MDD alpha/beta, positional tables).
/// buffer: state that is saved but not trained (batch-norm running stats).
enum class ParamGroup { decay, no_decay, buffer };

std::string_view to_string(ParamGroup g);
ParamGroup param_group_from_string(std::string_view s);

struct ParamEntry {
  std::string name;
  Tensor4 value;
  Tensor4 m;  // first moment
  Tensor4 v;  // second moment
  ParamGroup group = ParamGroup::decay;

  [[nodiscard]] bool trainable() const { return group != ParamGroup::buffer; }
};

/// Registry of every named tensor of a model plus optimizer moments.
/// Insertion order is preserved and defines checkpoint layout.
class ModelState {
 public:
  Tensor4& add(const std::string& name, Tensor4 init, ParamGroup group);

  [[nodiscard]] bool contains(const std::string& name) const { return index_.contains(name); }
  [[nodiscard]] const Tensor4& value(const std::string& name) const { return entry(name).value; }
  Tensor4& value(const std::string& name) { return entry(name).value; }
  [[nodiscard]] const ParamEntry& entry(const std::string& name) const;
  ParamEntry& entry(const std::string& name);

  [[nodiscard]] const std::vector<ParamEntry>& entries() const { return entries_; }
  std::vector<ParamEntry>& entries() { return entries_; }

  std::uint64_t step = 0;

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Total number of trainable scalars.
std::size_t count_params(const ModelState& state);

}  // namespace tracknet
