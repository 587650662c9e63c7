#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aol {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

// Gradient buffers of the parents of a node, in parent order. A slot is null
// when that parent does not take part in differentiation.
using GradSlots = std::span<std::vector<double>* const>;
using BackwardFn =
    std::function<void(std::span<const double> grad_out, GradSlots parent_grads)>;

struct Node {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // leaf accumulation buffer, empty until first backward
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;  // empty for leaves
};

}  // namespace detail

/// Dense row-major array of doubles that can take part in reverse-mode
/// differentiation.
///
/// Copies are cheap handles onto the same storage. The values of a tensor
/// never change after construction; only the gradient buffer of a leaf is
/// written, by backward().
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  // Result of a differentiable operation. The node is linked into the graph
  // only when at least one input requires a gradient.
  static Tensor from_op(Shape shape, std::vector<double> values,
                        const std::vector<Tensor>& inputs, detail::BackwardFn backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::vector<double> to_vector() const;
  double operator[](std::size_t i) const { return data()[i]; }
  double at(std::size_t row, std::size_t col) const;
  double item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  Tensor grad_tensor() const;
  void zero_grad() const;

  // Same values, no history. Nothing upstream of the result is ever reached
  // by a backward pass started downstream of it.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Differentiable nodes reachable from a root, in creation (topological)
/// order. A tape serves exactly one reverse sweep.
class GradientTape {
 public:
  explicit GradientTape(const Tensor& root);

  std::size_t size() const { return records_.size(); }
  bool active() const { return active_; }

  // Reverse sweep seeded with d(root) = 1. Returns the adjoint of every
  // record, aligned with records(). Deactivates the tape.
  std::vector<std::vector<double>> sweep();

  const std::vector<const detail::Node*>& records() const { return records_; }
  std::size_t index_of(const detail::Node* node) const;

 private:
  Tensor root_;  // keeps every recorded node alive
  std::vector<const detail::Node*> records_;
  bool active_ = true;
};

/// Accumulates d(loss)/d(leaf) into every requires-grad leaf reachable from
/// `loss`. Calling it twice without zero_grad() doubles the buffers.
void backward(const Tensor& loss);

/// d(loss)/d(input) for each input, without touching any grad buffer.
/// Inputs unreachable from `loss` get a zero gradient.
std::vector<Tensor> grad(const Tensor& loss, std::span<const Tensor> inputs);

}  // namespace aol
