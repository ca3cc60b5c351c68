#pragma once

#include <functional>
#include <string>
#include <vector>

#include "capstate/model/tensor.hpp"

namespace capstate::model {

using Var = std::size_t;

// Reverse-mode gradient tape. Every op appends one node holding its value and
// a closure that pushes the node's gradient to its inputs. Nodes are only
// ever appended, so reverse index order is a valid topological order.
class Tape {
public:
  struct Node {
    Tensor value;
    Tensor grad; // allocated on first use
    std::function<void(Tape &, Var)> backward;
    bool requires_grad = false;
    std::string tag; // optional label for probes
  };

  Var leaf(Tensor value, bool requires_grad = false) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  Var push(Tensor value, std::vector<Var> inputs,
           std::function<void(Tape &, Var)> backward) {
    bool rg = false;
    for (Var v : inputs) rg = rg || nodes_[v].requires_grad;
    Node n;
    n.value = std::move(value);
    n.requires_grad = rg;
    if (rg) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  const Tensor &value(Var v) const { return nodes_[v].value; }
  bool requires_grad(Var v) const { return nodes_[v].requires_grad; }

  // Gradient buffer of v, zero-initialized on first access.
  Tensor &grad(Var v) {
    auto &n = nodes_[v];
    if (n.grad.shape != n.value.shape) n.grad = Tensor(n.value.shape, 0.0);
    return n.grad;
  }
  bool has_grad(Var v) const { return nodes_[v].grad.shape == nodes_[v].value.shape; }

  void tag(Var v, std::string t) { nodes_[v].tag = std::move(t); }
  const std::string &tag_of(Var v) const { return nodes_[v].tag; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 for a scalar root and runs every closure.
  void backward(Var root) {
    if (nodes_[root].value.size() != 1)
      throw ParameterError("tape: backward needs a scalar root");
    grad(root)[0] = 1.0;
    for (Var v = root + 1; v-- > 0;) {
      auto &n = nodes_[v];
      if (n.backward && has_grad(v)) n.backward(*this, v);
    }
  }

  // Sign pattern of every ReLU input seen so far. Finite-difference checks use
  // it to spot steps that cross a kink.
  std::vector<unsigned char> &relu_signature() { return relu_signature_; }

private:
  std::vector<Node> nodes_;
  std::vector<unsigned char> relu_signature_;
};

} // namespace capstate::model
