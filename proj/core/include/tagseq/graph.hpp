#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tagseq/rng.hpp"
#include "tagseq/tensor.hpp"

namespace tagseq {

// Named trainable array with a gradient slot. Values are mutated only by the
// optimizer, never inside a recorded graph.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

// Owns parameters in creation order; names are unique.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, Shape shape);
  Parameter& create_uniform(const std::string& name, Shape shape, Rng& rng, double lo, double hi);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);

  void zero_grads();
  double grad_norm() const;

  size_t size() const { return params_.size(); }
  Parameter& operator[](size_t i) { return *params_[i]; }
  const Parameter& operator[](size_t i) const { return *params_[i]; }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Handle to a node in a Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Record-and-replay reverse-mode autodiff over a small fixed op set. Nodes
// are appended in forward order (which is therefore topological); backward
// walks them once in reverse. Tensors are never mutated once recorded.
class Graph {
 public:
  Var input(Tensor value);
  Var param(Parameter& p);

  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  // Same shape, or b a vector broadcast across rows of a, or b scalar.
  Var add(Var a, Var b);
  // Elementwise; b may be scalar (shape [1]).
  Var mul(Var a, Var b);
  // Multiply by a compile-time constant (mul with an implicit scalar input).
  Var scale(Var a, double c);
  Var concat(const std::vector<Var>& xs, int axis);
  Var slice(Var a, int row0, int row1, int col0, int col1);
  Var slice_cols(Var a, int col0, int col1) { return slice(a, 0, value(a).rows(), col0, col1); }
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var softmax(Var a, int axis);
  Var layer_norm(Var x, Var gain, Var bias, double eps);
  // Gathers rows of `table` ([V x d]); backward scatter-adds into the table.
  Var embedding(Var table, std::span<const int> ids);
  // Weighted sum over rows of (logsumexp(row) - row[target]); weights mask
  // padding. Returns a scalar.
  Var cross_entropy(Var logits, std::span<const int> targets, std::span<const double> weights);
  // Reduce to scalar, composed from matmul against ones.
  Var sum(Var a);

  // Accumulates gradients of `loss` (a scalar) into every reachable
  // parameter's grad slot. Caller zeroes grads when accumulation across
  // graphs is not wanted.
  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[check(v)].value; }
  // Gradient of v after backward(); zeros when v was unreachable.
  const Tensor& grad(Var v);
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    const char* op;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    Parameter* bound = nullptr;
    std::function<void(Graph&, Node&)> pull;  // propagate node.grad to inputs
  };

  int check(Var v) const;
  Var push(const char* op, std::vector<int> inputs, Tensor value,
           std::function<void(Graph&, Node&)> pull);
  Tensor& grad_buf(int id);

  std::vector<Node> nodes_;
};

}  // namespace tagseq
