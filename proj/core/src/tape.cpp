#include "tracknet/tape.hpp"

#include <atomic>
#include <optional>

namespace tracknet {
namespace {

std::uint64_t next_tape_uid() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

}  // namespace

const Tensor4& Gradients::of(Var v) const {
  const auto it = leaves.find(v.id);
  if (it == leaves.end()) throw TensorError("Gradients: no gradient recorded for node " + std::to_string(v.id));
  return it->second;
}

const Tensor4& Gradients::of(const std::string& param) const {
  const auto it = params.find(param);
  if (it == params.end()) throw TensorError("Gradients: no gradient for parameter '" + param + "'");
  return it->second;
}

Tape::Tape() : uid_(next_tape_uid()) {}

int Tape::check(Var v) const {
  if (v.tape != uid_ || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw TensorError("Tape: variable does not belong to this tape");
  }
  return v.id;
}

Var Tape::push_leaf(Node node) {
  node.is_leaf = true;
  if (!node.value().all_finite()) throw TensorError("Tape: non-finite leaf value");
  nodes_.push_back(std::move(node));
  return Var{uid_, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::input(Tensor4 value) {
  Node n;
  n.owned = std::move(value);
  return push_leaf(std::move(n));
}

Var Tape::variable(Tensor4 value) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = true;
  return push_leaf(std::move(n));
}

Var Tape::parameter(const std::string& name, const Tensor4& value) {
  if (const auto it = param_nodes_.find(name); it != param_nodes_.end()) {
    return Var{uid_, it->second};
  }
  Node n;
  n.external = &value;
  n.needs_grad = true;
  n.param_name = name;
  const Var v = push_leaf(std::move(n));
  param_nodes_.emplace(name, v.id);
  return v;
}

Var Tape::apply(PrimitiveKind kind, std::initializer_list<Var> inputs, const OpParams& params) {
  return apply(kind, std::span<const Var>(inputs.begin(), inputs.size()), params);
}

Var Tape::apply(PrimitiveKind kind, std::span<const Var> inputs, const OpParams& params) {
  Node node;
  node.kind = kind;
  node.params = params;
  std::vector<const Tensor4*> values;
  values.reserve(inputs.size());
  for (const Var v : inputs) {
    const int id = check(v);
    node.inputs.push_back(id);
    values.push_back(&nodes_[id].value());
    node.needs_grad = node.needs_grad || nodes_[id].needs_grad;
  }
  node.owned = primitive_forward(kind, values, params, node.aux);
  if (!node.owned.all_finite()) {
    throw TensorError(std::string(to_string(kind)) + ": non-finite output for input shape " +
                      (values.empty() ? std::string("()") : values.front()->shape().str()));
  }
  macs_ += primitive_macs(kind, values, params, node.owned.shape());
  nodes_.push_back(std::move(node));
  return Var{uid_, static_cast<int>(nodes_.size() - 1)};
}

const Tensor4& Tape::value(Var v) const { return nodes_[check(v)].value(); }
const std::vector<Tensor4>& Tape::aux(Var v) const { return nodes_[check(v)].aux; }
PrimitiveKind Tape::kind(Var v) const { return nodes_[check(v)].kind; }

Gradients Tape::backward(Var loss) const {
  const int root = check(loss);
  if (nodes_[root].value().size() != 1) {
    throw TensorError("Tape::backward: loss must be a scalar, got shape " + nodes_[root].value().shape().str());
  }
  Gradients result;
  if (!nodes_[root].needs_grad) return result;

  std::vector<std::optional<Tensor4>> grads(nodes_.size());
  grads[root] = Tensor4(nodes_[root].value().shape(), 1.0);
  std::vector<const Tensor4*> values;
  std::vector<Tensor4*> targets;
  for (int i = root; i >= 0; --i) {
    if (!grads[i].has_value()) continue;
    const Node& node = nodes_[i];
    if (node.is_leaf) {
      if (!node.param_name.empty()) result.params.emplace(node.param_name, std::move(*grads[i]));
      else result.leaves.emplace(i, std::move(*grads[i]));
      grads[i].reset();
      continue;
    }
    values.clear();
    targets.clear();
    for (const int in : node.inputs) {
      values.push_back(&nodes_[in].value());
      if (nodes_[in].needs_grad) {
        if (!grads[in].has_value()) grads[in] = Tensor4(nodes_[in].value().shape());
        targets.push_back(&*grads[in]);
      } else {
        targets.push_back(nullptr);
      }
    }
    primitive_backward(node.kind, values, node.params, node.owned, node.aux, *grads[i], targets);
    grads[i].reset();
  }
  return result;
}

bool Tape::replay_matches() const {
  std::vector<Tensor4> replayed(nodes_.size());
  std::vector<const Tensor4*> values;
  std::vector<Tensor4> aux;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& node = nodes_[i];
    if (node.is_leaf) {
      replayed[i] = node.value();
      continue;
    }
    values.clear();
    for (const int in : node.inputs) values.push_back(&replayed[in]);
    replayed[i] = primitive_forward(node.kind, values, node.params, aux);
    if (!(replayed[i] == node.owned)) return false;
  }
  return true;
}

}  // namespace tracknet
