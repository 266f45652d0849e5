#include "floodcast/tensor/tape.hpp"

#include "floodcast/errors.hpp"

namespace floodcast {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::leaf(Tensor value, std::string name) {
  Node n;
  n.id = nodes_.size();
  n.op = std::move(name);
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.back().id);
}

Var Tape::constant(Tensor value, std::string name) {
  Node n;
  n.id = nodes_.size();
  n.op = std::move(name);
  n.value = std::move(value);
  n.requires_grad = false;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.back().id);
}

Var Tape::record(std::string op, Tensor value, std::vector<NodeId> inputs, BackwardFn backward) {
  Node n;
  n.id = nodes_.size();
  for (auto in : inputs) {
    if (in >= n.id) throw ContractError("node input " + std::to_string(in) + " is not on the tape yet");
    n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  }
  n.op = std::move(op);
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.back().id);
}

const Tensor& Tape::grad(NodeId id) {
  Node& n = nodes_.at(id);
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::zero_grads() {
  for (auto& n : nodes_) {
    if (!n.grad.empty()) n.grad.fill(0.0);
  }
}

void Tape::backward(Var root) {
  if (root.id() >= nodes_.size()) throw ContractError("backward root is not on this tape");
  const Node& r = nodes_[root.id()];
  if (r.value.numel() != 1) {
    throw ContractError("backward needs a scalar root, got shape " + shape_string(r.value.shape()));
  }
  if (!r.requires_grad) return;

  // Fresh adjoints for this sweep, added into the persistent grads afterwards.
  std::vector<Tensor> adj(root.id() + 1);
  adj[root.id()] = Tensor(r.value.shape(), 1.0);
  std::vector<Tensor*> in_adj;

  for (std::size_t i = root.id() + 1; i-- > 0;) {
    if (adj[i].empty()) continue;
    Node& n = nodes_[i];
    if (n.backward) {
      in_adj.assign(n.inputs.size(), nullptr);
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        Node& in = nodes_[n.inputs[k]];
        if (!in.requires_grad) continue;
        if (adj[in.id].empty()) adj[in.id] = Tensor(in.value.shape(), 0.0);
        in_adj[k] = &adj[in.id];
      }
      n.backward(*this, n, adj[i], in_adj);
    }
    if (n.grad.empty()) {
      n.grad = std::move(adj[i]);
    } else {
      n.grad += adj[i];
    }
    adj[i] = Tensor();
  }
}

}  // namespace floodcast
