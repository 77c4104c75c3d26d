#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tracknet/primitives.hpp"
#include "tracknet/tensor.hpp"

namespace tracknet {

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint64_t tape = 0;
  int id = -1;
  [[nodiscard]] bool valid() const { return id >= 0; }
};

/// Result of a reverse sweep. Parameter gradients are keyed by parameter
/// name; gradients of unnamed differentiable leaves are keyed by node.
struct Gradients {
  std::map<std::string, Tensor4> params;
  std::unordered_map<int, Tensor4> leaves;

  [[nodiscard]] const Tensor4& of(Var v) const;
  [[nodiscard]] const Tensor4& of(const std::string& param) const;
};

/// Records primitive applications in execution order, which is also a
/// topological order. One Tape belongs to one thread.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Constant leaf; receives no gradient.
  Var input(Tensor4 value);
  /// Differentiable unnamed leaf.
  Var variable(Tensor4 value);
  /// Named differentiable leaf referencing storage owned by the caller. The
  /// referenced tensor must outlive the tape and stay unchanged while it is
  /// in use. Binding the same name twice returns the same node.
  Var parameter(const std::string& name, const Tensor4& value);

  Var apply(PrimitiveKind kind, std::initializer_list<Var> inputs, const OpParams& params = {});
  Var apply(PrimitiveKind kind, std::span<const Var> inputs, const OpParams& params = {});

  [[nodiscard]] const Tensor4& value(Var v) const;
  [[nodiscard]] const std::vector<Tensor4>& aux(Var v) const;
  [[nodiscard]] PrimitiveKind kind(Var v) const;

  /// Reverse-mode sweep from a scalar node.
  [[nodiscard]] Gradients backward(Var loss) const;

  /// Re-executes every recorded forward from the stored leaves and reports
  /// whether each output is reproduced bit-exactly.
  [[nodiscard]] bool replay_matches() const;

  /// Multiply-accumulates performed by all recorded applications.
  [[nodiscard]] std::uint64_t macs() const { return macs_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    bool is_leaf = false;
    PrimitiveKind kind = PrimitiveKind::sum;
    OpParams params;
    std::vector<int> inputs;
    Tensor4 owned;
    const Tensor4* external = nullptr;
    std::vector<Tensor4> aux;
    bool needs_grad = false;
    std::string param_name;

    [[nodiscard]] const Tensor4& value() const { return external != nullptr ? *external : owned; }
  };

  int check(Var v) const;
  Var push_leaf(Node node);

  std::uint64_t uid_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> param_nodes_;
  std::uint64_t macs_ = 0;
};

}  // namespace tracknet
