#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aol/rng.hpp"
#include "aol/tensor.hpp"

namespace aol {

struct ForwardResult {
  Tensor features;  // last hidden activations, concatenated with aux when present
  Tensor logits;
  Tensor probs;     // sigmoid(logits)
};

/// Dense ReLU network with a sigmoid-per-class head.
///
/// layer_dims = {input, hidden..., feature}. The head maps the feature vector
/// (plus an optional auxiliary vector of width aux_dim) to n_classes logits.
/// Parameters are ordered W0, b0, W1, b1, ..., W_head, b_head with weights
/// stored [fan_in, fan_out]. A Classifier is immutable; updates build new ones.
class Classifier {
 public:
  Classifier() = default;
  static Classifier init(const std::vector<std::size_t>& layer_dims, std::size_t n_classes,
                         std::size_t aux_dim, Rng& rng);

  const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t aux_dim() const { return aux_dim_; }
  std::size_t input_dim() const { return layer_dims_.front(); }
  // Width of ForwardResult::features.
  std::size_t feature_dim() const { return layer_dims_.back() + aux_dim_; }

  const std::vector<Tensor>& params() const { return params_; }

  // New classifier with the given parameters; shapes must match.
  Classifier with_params(std::vector<Tensor> params) const;

  // x: [batch, input_dim]; aux: [batch, aux_dim] iff aux_dim > 0.
  ForwardResult forward(const Tensor& x, const std::optional<Tensor>& aux = std::nullopt) const;

  // Flat binary format: u64 count of layer dims, the dims, u64 n_classes,
  // u64 aux_dim, then every parameter as row-major f64 in declaration order.
  void save(std::ostream& out) const;
  static Classifier load(std::istream& in);

 private:
  Classifier(std::vector<std::size_t> dims, std::size_t n_classes, std::size_t aux_dim,
             std::vector<Tensor> params);
  std::vector<Shape> param_shapes() const;

  std::vector<std::size_t> layer_dims_;
  std::size_t n_classes_ = 0;
  std::size_t aux_dim_ = 0;
  std::vector<Tensor> params_;
};

std::vector<Tensor> params_get(const Classifier& model);
Classifier params_set(const Classifier& model, std::vector<Tensor> params);

// Leaf copies of the parameters with requires_grad set, for one training step.
std::vector<Tensor> trainable_copy(const std::vector<Tensor>& params);

// Forward pass using explicit parameters in the classifier's layout.
ForwardResult forward_with(const Classifier& shape_of, const std::vector<Tensor>& params,
                           const Tensor& x, const std::optional<Tensor>& aux);

// Argmax over one row of probabilities; ties go to the lowest index.
std::size_t predict_class(std::span<const double> probs);
std::vector<std::size_t> predict_classes(const ForwardResult& result);

void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);
void write_f64s(std::ostream& out, std::span<const double> values);
std::vector<double> read_f64s(std::istream& in, std::size_t count);

}  // namespace aol
