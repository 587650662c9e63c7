#include "aol/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace aol {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void validate(const Shape& shape, std::size_t n_values) {
  if (shape.empty()) throw ShapeError("tensor shape must be nonempty");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimension must be positive, got " + to_string(shape));
  }
  if (numel(shape) != n_values) {
    throw ShapeError("length mismatch: shape " + to_string(shape) + " needs " +
                     std::to_string(numel(shape)) + " values, got " + std::to_string(n_values));
  }
}

void require_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("operation produced a non-finite value");
  }
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  validate(shape, values.size());
  require_finite(values);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  node_ = std::move(node);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = aol::numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::from_op(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                       detail::BackwardFn backward) {
  Tensor out(std::move(shape), std::move(values), false);
  bool any = std::any_of(inputs.begin(), inputs.end(),
                         [](const Tensor& t) { return t.requires_grad(); });
  if (any) {
    out.node_->requires_grad = true;
    out.node_->parents.reserve(inputs.size());
    for (const auto& t : inputs) out.node_->parents.push_back(t.node_);
    out.node_->backward = std::move(backward);
  }
  return out;
}

const Shape& Tensor::shape() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + to_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return aol::numel(shape()); }

std::span<const double> Tensor::data() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return node_->data;
}

std::vector<double> Tensor::to_vector() const {
  auto d = data();
  return {d.begin(), d.end()};
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw ShapeError("at(row, col) needs a matrix, got " + to_string(shape()));
  return node_->data[row * node_->shape[1] + col];
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() needs a single-element tensor, got " + to_string(shape()));
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return node_ && !node_->backward; }
bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return node_->grad;
}

Tensor Tensor::grad_tensor() const {
  if (!has_grad()) return Tensor::zeros(shape());
  return Tensor(shape(), node_->grad);
}

void Tensor::zero_grad() const {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->data, false); }

GradientTape::GradientTape(const Tensor& root) : root_(root) {
  if (!root.requires_grad()) return;
  // Iterative post-order DFS: a node is emitted after all of its parents.
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::pair<const detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      records_.push_back(node);
      stack.pop_back();
    }
  }
}

std::size_t GradientTape::index_of(const detail::Node* node) const {
  auto it = std::find(records_.begin(), records_.end(), node);
  return it == records_.end() ? records_.size() : static_cast<std::size_t>(it - records_.begin());
}

std::vector<std::vector<double>> GradientTape::sweep() {
  if (!active_) throw std::logic_error("gradient tape already consumed");
  active_ = false;
  std::vector<std::vector<double>> adjoint(records_.size());
  if (records_.empty()) return adjoint;

  std::unordered_map<const detail::Node*, std::size_t> index;
  index.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) index.emplace(records_[i], i);

  adjoint.back().assign(records_.back()->data.size(), 1.0);
  std::vector<std::vector<double>*> slots;
  for (std::size_t r = records_.size(); r-- > 0;) {
    const detail::Node* node = records_[r];
    if (!node->backward || adjoint[r].empty()) continue;
    slots.assign(node->parents.size(), nullptr);
    for (std::size_t p = 0; p < node->parents.size(); ++p) {
      const detail::Node* parent = node->parents[p].get();
      if (!parent->requires_grad) continue;
      auto& buf = adjoint[index.at(parent)];
      if (buf.empty()) buf.assign(parent->data.size(), 0.0);
      slots[p] = &buf;
    }
    node->backward(adjoint[r], slots);
  }
  return adjoint;
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " + to_string(loss.shape()));
  }
  GradientTape tape(loss);
  auto adjoint = tape.sweep();
  for (std::size_t i = 0; i < tape.size(); ++i) {
    auto* node = const_cast<detail::Node*>(tape.records()[i]);
    if (node->backward || adjoint[i].empty()) continue;
    if (node->grad.empty()) node->grad.assign(node->data.size(), 0.0);
    for (std::size_t j = 0; j < adjoint[i].size(); ++j) node->grad[j] += adjoint[i][j];
  }
}

std::vector<Tensor> grad(const Tensor& loss, std::span<const Tensor> inputs) {
  if (loss.numel() != 1) {
    throw ShapeError("grad() needs a scalar loss, got " + to_string(loss.shape()));
  }
  GradientTape tape(loss);
  auto adjoint = tape.sweep();
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const auto& input : inputs) {
    auto i = tape.index_of(input.node().get());
    if (i == tape.size() || adjoint[i].empty()) {
      out.push_back(Tensor::zeros(input.shape()));
    } else {
      out.emplace_back(input.shape(), std::move(adjoint[i]));
    }
  }
  return out;
}

}  // namespace aol
