#pragma once

// Reverse-mode automatic differentiation over dense Tensors.
//
// A Tape is rebuilt for every forward pass. Each recorded node owns its value
// and, after backward(), an adjoint of identical shape. Parameters live
// outside the tape; a parameter leaf forwards its adjoint into
// Parameter::grad when backward() runs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qonv/error.hpp"
#include "qonv/tensor.hpp"

namespace qonv {

/// A trainable tensor. `grad` always has the shape of `value`.
struct Parameter {
  std::string id;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string id_, Tensor v) : id(std::move(id_)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor(value.shape()); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
  Var() = default;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }

private:
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

class Tape {
public:
  /// Propagates the node's adjoint into its parents' adjoints.
  using BackwardFn = std::function<void(Tape&, const Tensor& adjoint)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, nullptr, false});
    return {this, nodes_.size() - 1};
  }

  Var param(Parameter& p) {
    nodes_.push_back(Node{p.value, {}, {}, nullptr, &p, true});
    return {this, nodes_.size() - 1};
  }

  /// Appends a derived node. Parents must already be on this tape.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn) {
    bool needs = false;
    for (auto p : parents) {
      if (p >= nodes_.size()) throw ContractError("tape parent index out of range");
      needs = needs || nodes_[p].requires_grad;
    }
    if (!value.all_finite()) throw NumericError("non-finite value produced on tape");
    nodes_.push_back(Node{std::move(value), {}, std::move(parents), needs ? std::move(fn) : nullptr,
                          nullptr, needs});
    return {this, nodes_.size() - 1};
  }

  const Tensor& value(std::size_t i) const { return nodes_.at(i).value; }
  const Tensor& adjoint(Var v) const { return nodes_.at(v.index()).adjoint; }
  bool requires_grad(std::size_t i) const { return nodes_.at(i).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Mutable adjoint of node `i` for use inside a BackwardFn.
  Tensor& adjoint_mut(std::size_t i) { return nodes_[i].adjoint; }

  /// Adds `g` into the adjoint of node `i` (no-op for constants).
  void accumulate(std::size_t i, const Tensor& g) {
    Node& n = nodes_[i];
    if (!n.requires_grad) return;
    if (g.shape() != n.adjoint.shape()) {
      throw DimensionError("adjoint " + shape_str(g.shape()) + " for node of shape " +
                           shape_str(n.adjoint.shape()));
    }
    auto dst = n.adjoint.data();
    auto src = g.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }

  /// Zeroes every node adjoint.
  void reset_adjoints() {
    for (auto& n : nodes_) n.adjoint = Tensor(n.value.shape());
  }

  /// Reverse sweep from a scalar loss. Every parameter in `params` has its
  /// gradient zeroed first, so parameters not reachable from `loss` end with
  /// a zero gradient.
  void backward(Var loss, const std::vector<Parameter*>& params = {}) {
    if (loss.tape() != this) throw ContractError("loss does not belong to this tape");
    if (loss.value().numel() != 1) {
      throw ContractError("backward() needs a scalar loss, got shape " + shape_str(loss.shape()));
    }
    for (Parameter* p : params) p->zero_grad();
    reset_adjoints();
    nodes_[loss.index()].adjoint[0] = 1.0;
    for (std::size_t i = loss.index() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad) continue;
      if (n.backward) n.backward(*this, n.adjoint);
      if (n.param) {
        auto dst = n.param->grad.data();
        auto src = n.adjoint.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
  }

private:
  struct Node {
    Tensor value;
    Tensor adjoint;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter* param;
    bool requires_grad;
  };

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(index_); }

inline void same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) throw ContractError("operands live on different tapes");
}

} // namespace qonv
