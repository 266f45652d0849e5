#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "floodcast/tensor/tensor.hpp"

namespace floodcast {

using NodeId = std::size_t;

class Tape;
struct Node;

// Adjoint propagation for one recorded operation. `upstream` is d(root)/d(output);
// `input_adjoints[i]` is null when input i does not require a gradient, and is
// accumulated into (+=) otherwise.
using BackwardFn = std::function<void(const Tape& tape, const Node& self, const Tensor& upstream,
                                      std::span<Tensor* const> input_adjoints)>;

struct Node {
  NodeId id = 0;
  std::string op;
  std::vector<NodeId> inputs;
  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value once touched
  bool requires_grad = false;
  BackwardFn backward;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  const Tensor& grad() const;
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

// Append-only record of differentiable operations. Inputs of a node always
// precede it, so reverse creation order is a valid reverse topological order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaf that receives gradients (parameters, or inputs under a gradient check).
  Var leaf(Tensor value, std::string name = "leaf");
  // Leaf that never receives gradients (data, targets).
  Var constant(Tensor value, std::string name = "const");

  Var record(std::string op, Tensor value, std::vector<NodeId> inputs, BackwardFn backward);

  // Reverse sweep from a scalar root. Gradients accumulate: calling this
  // twice without zero_grads() doubles every grad.
  void backward(Var root);
  void zero_grads();

  const Node& node(NodeId id) const { return nodes_.at(id); }
  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  const Tensor& grad(NodeId id);
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

}  // namespace floodcast
