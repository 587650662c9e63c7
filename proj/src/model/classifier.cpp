#include "aol/model.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "aol/ops.hpp"

namespace aol {

Classifier::Classifier(std::vector<std::size_t> dims, std::size_t n_classes, std::size_t aux_dim,
                       std::vector<Tensor> params)
    : layer_dims_(std::move(dims)), n_classes_(n_classes), aux_dim_(aux_dim),
      params_(std::move(params)) {}

std::vector<Shape> Classifier::param_shapes() const {
  std::vector<Shape> shapes;
  for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    shapes.push_back({layer_dims_[l], layer_dims_[l + 1]});
    shapes.push_back({layer_dims_[l + 1]});
  }
  shapes.push_back({feature_dim(), n_classes_});
  shapes.push_back({n_classes_});
  return shapes;
}

Classifier Classifier::init(const std::vector<std::size_t>& layer_dims, std::size_t n_classes,
                            std::size_t aux_dim, Rng& rng) {
  if (layer_dims.empty()) throw std::invalid_argument("classifier needs at least an input dimension");
  for (auto d : layer_dims) {
    if (d == 0) throw std::invalid_argument("classifier layer dimensions must be positive");
  }
  if (n_classes == 0) throw std::invalid_argument("classifier needs at least one class");

  Classifier model(layer_dims, n_classes, aux_dim, {});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& shape : model.param_shapes()) {
    std::vector<double> values(numel(shape), 0.0);
    if (shape.size() == 2) {
      const double std = std::sqrt(2.0 / static_cast<double>(shape[0]));
      for (auto& v : values) v = std * normal(rng);
    }
    model.params_.emplace_back(shape, std::move(values));
  }
  return model;
}

Classifier Classifier::with_params(std::vector<Tensor> params) const {
  auto shapes = param_shapes();
  if (params.size() != shapes.size()) {
    throw ShapeError("classifier expects " + std::to_string(shapes.size()) + " parameter tensors, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params[i].shape() != shapes[i]) {
      throw ShapeError("parameter " + std::to_string(i) + " should be " + to_string(shapes[i]) +
                       ", got " + to_string(params[i].shape()));
    }
  }
  // Fresh detached copies so the new classifier shares no graph or grad state.
  for (auto& p : params) p = p.detach();
  return Classifier(layer_dims_, n_classes_, aux_dim_, std::move(params));
}

ForwardResult Classifier::forward(const Tensor& x, const std::optional<Tensor>& aux) const {
  return forward_with(*this, params_, x, aux);
}

ForwardResult forward_with(const Classifier& model, const std::vector<Tensor>& params,
                           const Tensor& x, const std::optional<Tensor>& aux) {
  if (x.rank() != 2 || x.dim(1) != model.input_dim()) {
    throw ShapeError("classifier input should be [batch, " + std::to_string(model.input_dim()) +
                     "], got " + to_string(x.shape()));
  }
  if (aux && model.aux_dim() == 0) {
    throw ShapeError("auxiliary features supplied to a classifier without an aux channel");
  }
  if (!aux && model.aux_dim() > 0) {
    throw ShapeError("classifier expects auxiliary features of width " + std::to_string(model.aux_dim()));
  }
  if (aux && (aux->rank() != 2 || aux->dim(0) != x.dim(0) || aux->dim(1) != model.aux_dim())) {
    throw ShapeError("auxiliary features should be [" + std::to_string(x.dim(0)) + ", " +
                     std::to_string(model.aux_dim()) + "], got " + to_string(aux->shape()));
  }

  const std::size_t hidden_layers = model.layer_dims().size() - 1;
  Tensor h = x;
  for (std::size_t l = 0; l < hidden_layers; ++l) {
    h = relu(add_bias(matmul(h, params[2 * l]), params[2 * l + 1]));
  }
  Tensor features = aux ? concat({h, *aux}, 1) : h;
  Tensor logits = add_bias(matmul(features, params[2 * hidden_layers]), params[2 * hidden_layers + 1]);
  Tensor probs = sigmoid(logits);
  return {features, logits, probs};
}

void Classifier::save(std::ostream& out) const {
  write_u64(out, layer_dims_.size());
  for (auto d : layer_dims_) write_u64(out, d);
  write_u64(out, n_classes_);
  write_u64(out, aux_dim_);
  for (const auto& p : params_) write_f64s(out, p.data());
  if (!out) throw std::runtime_error("failed writing classifier parameters");
}

Classifier Classifier::load(std::istream& in) {
  const auto n_dims = read_u64(in);
  if (n_dims == 0 || n_dims > 64) throw std::runtime_error("classifier file: implausible layer count");
  std::vector<std::size_t> dims(n_dims);
  for (auto& d : dims) d = read_u64(in);
  const auto n_classes = read_u64(in);
  const auto aux_dim = read_u64(in);
  Classifier model(dims, n_classes, aux_dim, {});
  for (const auto& shape : model.param_shapes()) {
    model.params_.emplace_back(shape, read_f64s(in, numel(shape)));
  }
  return model;
}

std::vector<Tensor> params_get(const Classifier& model) { return model.params(); }

Classifier params_set(const Classifier& model, std::vector<Tensor> params) {
  return model.with_params(std::move(params));
}

std::vector<Tensor> trainable_copy(const std::vector<Tensor>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.shape(), p.to_vector(), true);
  return out;
}

std::size_t predict_class(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j) {
    if (probs[j] > probs[best]) best = j;
  }
  return best;
}

std::vector<std::size_t> predict_classes(const ForwardResult& result) {
  const auto& probs = result.probs;
  const std::size_t rows = probs.dim(0), width = probs.dim(1);
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = predict_class(probs.data().subspan(r * width, width));
  return out;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw std::runtime_error("unexpected end of file reading a 64-bit count");
  }
  return v;
}

void write_f64s(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> read_f64s(std::istream& in, std::size_t count) {
  std::vector<double> values(count);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(double)))) {
    throw std::runtime_error("unexpected end of file reading " + std::to_string(count) + " values");
  }
  return values;
}

}  // namespace aol
