#include "tracknet/model_state.hpp"

namespace tracknet {

std::string_view to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::decay: return "decay";
    case ParamGroup::no_decay: return "no_decay";
    case ParamGroup::buffer: return "buffer";
  }
  return "decay";
}

ParamGroup param_group_from_string(std::string_view s) {
  if (s == "decay") return ParamGroup::decay;
  if (s == "no_decay") return ParamGroup::no_decay;
  if (s == "buffer") return ParamGroup::buffer;
  throw TensorError("unknown parameter group '" + std::string(s) + "'");
}

Tensor4& ModelState::add(const std::string& name, Tensor4 init, ParamGroup group) {
  if (index_.contains(name)) throw TensorError("ModelState: duplicate parameter '" + name + "'");
  ParamEntry e;
  e.name = name;
  e.m = Tensor4(init.shape());
  e.v = Tensor4(init.shape());
  e.value = std::move(init);
  e.group = group;
  index_.emplace(name, entries_.size());
  entries_.push_back(std::move(e));
  return entries_.back().value;
}

const ParamEntry& ModelState::entry(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw TensorError("ModelState: unknown parameter '" + name + "'");
  return entries_[it->second];
}

ParamEntry& ModelState::entry(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw TensorError("ModelState: unknown parameter '" + name + "'");
  return entries_[it->second];
}

std::size_t count_params(const ModelState& state) {
  std::size_t total = 0;
  for (const auto& e : state.entries()) {
    if (e.trainable()) total += e.value.size();
  }
  return total;
}

}  // namespace tracknet
