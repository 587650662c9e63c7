#include <cmath>
#include <istream>
#include <ostream>

#include "aol/metatrain.hpp"
#include "aol/ops.hpp"

namespace aol {

AttentionParams AttentionParams::zeros(AttentionArchitecture arch, std::size_t n_sets,
                                       std::size_t feature_dim) {
  if (n_sets == 0 || feature_dim == 0) throw std::invalid_argument("attention needs M >= 1 and D >= 1");
  AttentionParams p;
  p.arch = arch;
  p.n_sets = n_sets;
  p.feature_dim = feature_dim;
  if (arch == AttentionArchitecture::Concatenated) {
    p.weight = Tensor::zeros({n_sets * feature_dim, n_sets});
    p.bias = Tensor::zeros({n_sets});
  } else {
    p.weight = Tensor::zeros({feature_dim, 1});
    p.bias = Tensor::zeros({1});
  }
  return p;
}

AttentionParams AttentionParams::with_tensors(Tensor weight, Tensor bias) const {
  if (weight.shape() != this->weight.shape() || bias.shape() != this->bias.shape()) {
    throw ShapeError("attention parameters should be " + to_string(this->weight.shape()) + " and " +
                     to_string(this->bias.shape()));
  }
  AttentionParams p = *this;
  p.weight = weight.detach();
  p.bias = bias.detach();
  return p;
}

void AttentionParams::save(std::ostream& out) const {
  write_u64(out, weight.dim(0));
  write_u64(out, weight.dim(1));
  write_f64s(out, weight.data());
  write_f64s(out, bias.data());
  if (!out) throw std::runtime_error("failed writing attention parameters");
}

AttentionParams AttentionParams::load(std::istream& in, AttentionArchitecture arch, std::size_t n_sets,
                                      std::size_t feature_dim) {
  auto p = zeros(arch, n_sets, feature_dim);
  const auto rows = read_u64(in);
  const auto cols = read_u64(in);
  if (rows != p.weight.dim(0) || cols != p.weight.dim(1)) {
    throw std::runtime_error("checkpoint attention block is " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", expected " + to_string(p.weight.shape()));
  }
  p.weight = Tensor(p.weight.shape(), read_f64s(in, rows * cols));
  p.bias = Tensor(p.bias.shape(), read_f64s(in, p.bias.numel()));
  return p;
}

Tensor attend(const AttentionParams& attn, const Tensor& stacked) {
  const std::size_t m = attn.n_sets, d = attn.feature_dim;
  if (stacked.rank() != 2 || stacked.dim(1) != m * d) {
    throw ShapeError("attention expects stacked features [batch, " + std::to_string(m * d) + "], got " +
                     to_string(stacked.shape()));
  }
  const std::size_t b = stacked.dim(0);
  if (attn.arch == AttentionArchitecture::Concatenated) {
    return softmax(add_bias(matmul(stacked, attn.weight), attn.bias));
  }
  Tensor per_set = reshape(stacked, {b * m, d});
  Tensor scores = add_bias(matmul(per_set, attn.weight), attn.bias);
  return softmax(reshape(scores, {b, m}));
}

Tensor sample_label(const Tensor& weights, const std::vector<Tensor>& label_sets) {
  if (label_sets.empty()) throw ShapeError("sample_label: no label sets");
  if (weights.rank() != 2 || weights.dim(1) != label_sets.size()) {
    throw ShapeError("sample_label: weights " + to_string(weights.shape()) + " do not match " +
                     std::to_string(label_sets.size()) + " label sets");
  }
  Tensor total;
  for (std::size_t m = 0; m < label_sets.size(); ++m) {
    if (label_sets[m].shape() != label_sets.front().shape() || label_sets[m].dim(0) != weights.dim(0)) {
      throw ShapeError("sample_label: label set " + std::to_string(m) + " has shape " +
                       to_string(label_sets[m].shape()));
    }
    Tensor term = scale_rows(label_sets[m], slice_cols(weights, m, 1));
    total = m == 0 ? term : add(total, term);
  }
  return total;
}

Tensor binarize(const Tensor& y_soft, double k, double t) {
  return sigmoid(scalar_mul(scalar_add(y_soft, -t), k));
}

AttentionUpdate attention_step(const AttentionParams& attn, const std::vector<Tensor>& label_sets,
                               const Tensor& stacked, const Tensor& pred_probs, const MetaConfig& config) {
  AttentionParams live = attn;
  live.weight = Tensor(attn.weight.shape(), attn.weight.to_vector(), true);
  live.bias = Tensor(attn.bias.shape(), attn.bias.to_vector(), true);

  Tensor weights = attend(live, stacked.detach());
  Tensor y_tilde = binarize(sample_label(weights, label_sets), config.k, config.t_threshold);
  Tensor loss = bce_loss(pred_probs.detach(), y_tilde);
  std::vector<Tensor> inputs{live.weight, live.bias};
  auto grads = grad(loss, inputs);
  auto next = sgd_step({attn.weight, attn.bias}, grads, config.attention_lr());
  return {attn.with_tensors(next[0], next[1]), grads[0], grads[1], loss.item()};
}

double reweighted_loss(std::span<const double> pred, const std::vector<std::vector<double>>& label_sets,
                       std::span<const double> weights) {
  if (label_sets.size() != weights.size()) {
    throw ShapeError("reweighted_loss: " + std::to_string(label_sets.size()) + " label sets but " +
                     std::to_string(weights.size()) + " weights");
  }
  const Tensor p({pred.size()}, {pred.begin(), pred.end()});
  double total = 0.0;
  for (std::size_t m = 0; m < label_sets.size(); ++m) {
    total += weights[m] * bce_loss(p, Tensor({pred.size()}, label_sets[m])).item();
  }
  return total;
}

double theorem1_gap(std::span<const double> pred, const std::vector<std::vector<double>>& label_sets,
                    std::span<const double> weights) {
  if (label_sets.size() != weights.size()) throw ShapeError("theorem1_gap: weight count mismatch");
  std::vector<double> mixed(pred.size(), 0.0);
  for (std::size_t m = 0; m < label_sets.size(); ++m) {
    if (label_sets[m].size() != pred.size()) throw ShapeError("theorem1_gap: label length mismatch");
    for (std::size_t i = 0; i < pred.size(); ++i) mixed[i] += weights[m] * label_sets[m][i];
  }
  const Tensor p({pred.size()}, {pred.begin(), pred.end()});
  const double lhs = bce_loss(p, Tensor({pred.size()}, mixed)).item();
  return std::abs(lhs - reweighted_loss(pred, label_sets, weights));
}

}  // namespace aol
