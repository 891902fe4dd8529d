#pragma once

#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "refnav/nn/params.hpp"
#include "refnav/nn/tensor.hpp"

namespace refnav::nn {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor2& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  /// Scalar value of a 1x1 node.
  double item() const;
  bool valid() const { return tape != nullptr; }
};

/// Records forward values and, per node, the rule that pushes its gradient
/// back to its inputs. Nodes are appended in evaluation order, so one reverse
/// sweep is a valid topological order.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Var constant(Tensor2 value);
  /// Leaf bound to a stored parameter; repeated calls return the same node and
  /// backward() adds the node's gradient into param.grad.
  Var param(Param& p);

  Var record(Tensor2 value, Backward backward);

  const Tensor2& value(int id) const { return nodes_[id].value; }
  /// Gradient buffer of a node, allocated on first use.
  Tensor2& grad(int id);
  bool has_grad(int id) const { return !nodes_[id].grad.empty() || nodes_[id].value.empty(); }

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 node and sweeps all nodes in reverse.
  void backward(Var loss);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    Backward backward;
    Param* param = nullptr;
  };
  std::deque<Node> nodes_;  // never relocates, so references stay valid while recording
  std::unordered_map<Param*, int> param_nodes_;
};

// Differentiable ops. Shapes follow the math: vectors are columns.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var square(Var a);
/// Softmax and log-softmax over the entries of a column vector.
Var softmax(Var v);
Var log_softmax(Var v);
/// Vertical concatenation of blocks with equal column count.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
/// Rows [begin, begin + n) of a.
Var slice_rows(Var a, std::size_t begin, std::size_t n);
/// Row i of a matrix as a column vector.
Var row(Var a, std::size_t i);
/// Matrix whose i-th row is the i-th column vector.
Var stack_rows(std::span<const Var> cols);
/// Element (i, 0) as 1x1.
Var pick(Var v, std::size_t i);
Var sum(Var a);
Var dot(Var a, Var b);
/// Elementwise mean of equally shaped nodes.
Var mean(std::span<const Var> parts);
/// Largest of 1x1 nodes; the gradient goes to the first maximal entry.
Var max_of(std::span<const Var> scalars);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace refnav::nn
