#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "aol/datasets.hpp"
#include "aol/model.hpp"
#include "aol/optim.hpp"

namespace aol {

enum class AttentionArchitecture {
  // One linear map from the concatenated M*D feedback vector to M logits.
  Concatenated,
  // One D -> 1 scorer shared by every label set.
  SharedScorer,
};

/// Learnable parameters of the attention-on-label module.
struct AttentionParams {
  AttentionArchitecture arch = AttentionArchitecture::Concatenated;
  std::size_t n_sets = 0;
  std::size_t feature_dim = 0;
  Tensor weight;  // Concatenated: [M*D, M]; SharedScorer: [D, 1]
  Tensor bias;    // Concatenated: [M];      SharedScorer: [1]

  static AttentionParams zeros(AttentionArchitecture arch, std::size_t n_sets, std::size_t feature_dim);
  AttentionParams with_tensors(Tensor weight, Tensor bias) const;

  // Appended to a classifier checkpoint: u64 rows, u64 cols, weight, bias.
  void save(std::ostream& out) const;
  static AttentionParams load(std::istream& in, AttentionArchitecture arch, std::size_t n_sets,
                              std::size_t feature_dim);
};

struct MetaConfig {
  double alpha = 0.2;       // meta (inner) learning rate
  double beta = 1e-4;       // global learning rate
  std::optional<double> attn_lr;  // attention step size; beta when unset
  double k = 50.0;          // binarization sharpness
  double t_threshold = 0.5; // binarization threshold
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  AttentionArchitecture attention = AttentionArchitecture::Concatenated;

  double attention_lr() const { return attn_lr.value_or(beta); }
  void validate() const;  // throws std::invalid_argument naming the bad field
};

/// One forward pass of the current model on a batch, made with trainable
/// copies of its parameters so the same graph serves every gradient of the
/// iteration.
struct Prediction {
  std::vector<Tensor> params;
  ForwardResult out;
};

Prediction predict(const Classifier& model, const Batch& batch);

// theta - alpha * grad L(pred, y_m). The source model is left untouched.
Classifier meta_step(const Classifier& model, const Prediction& pred, const Tensor& y_m, double alpha);

// Features of x under each meta model, detached, laid out [B, M*D] with block
// m holding F_m.
Tensor collect_feedback(const std::vector<Classifier>& meta_models, const Tensor& x,
                        const std::optional<Tensor>& aux);

// Per-sample softmax weights [B, M] over the label sets.
Tensor attend(const AttentionParams& attn, const Tensor& stacked_features);

// ybar = sum_m w[:, m] * y_m, per sample.
Tensor sample_label(const Tensor& weights, const std::vector<Tensor>& label_sets);

// 1 / (1 + exp(-k (y - t)))
Tensor binarize(const Tensor& y_soft, double k, double t);

// theta - Adam(grad_theta L(pred, y_tilde)); y_tilde is treated as a constant.
Classifier final_step(const Classifier& model, const Prediction& pred, const Tensor& y_tilde,
                      AdamState& adam);

struct AttentionUpdate {
  AttentionParams params;
  Tensor grad_weight;
  Tensor grad_bias;
  double loss = 0.0;
};

// Gradient step on (W_attn, b_attn) through binarization, label sampling and
// the softmax, with the predictions held constant.
AttentionUpdate attention_step(const AttentionParams& attn, const std::vector<Tensor>& label_sets,
                               const Tensor& stacked_features, const Tensor& pred_probs,
                               const MetaConfig& config);

struct IterationTrace {
  std::uint64_t iter = 0;
  std::vector<double> weights;       // [B * M], per-sample attention weights
  std::vector<double> weights_mean;  // [M]
  double loss_pre = 0.0;             // L(pred, y_tilde) before the update
  std::optional<double> loss_post;   // same batch and target after the update
  double model_update_norm = 0.0;
  double attention_update_norm = 0.0;
};

struct IterationResult {
  Classifier model;
  AttentionParams attention;
  IterationTrace trace;
};

IterationResult train_iteration(const Classifier& model, const AttentionParams& attn, AdamState& adam,
                                const Batch& batch, const MetaConfig& config, bool with_post_loss = false);

// Sum_m w_m L(pred, y_m) for one sample.
double reweighted_loss(std::span<const double> pred, const std::vector<std::vector<double>>& label_sets,
                       std::span<const double> weights);

// |L(pred, sum_m w_m y_m) - sum_m w_m L(pred, y_m)|, on the un-binarized label.
double theorem1_gap(std::span<const double> pred, const std::vector<std::vector<double>>& label_sets,
                    std::span<const double> weights);

struct AveragedLabels {};
// Which targets a baseline trains on: one label set, or the mean of all sets.
using LabelChoice = std::variant<std::size_t, AveragedLabels>;

Tensor baseline_targets(const Batch& batch, const LabelChoice& choice);

struct EpochSummary {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::vector<double> attention_mean;  // empty for baselines
};

using EpochHook = std::function<void(const EpochSummary&, const Classifier&)>;
using TraceSink = std::function<void(const IterationTrace&)>;

struct MetaResult {
  Classifier model;
  AttentionParams attention;
};

MetaResult train_meta(const Classifier& init, const LabeledDataset& train, const MetaConfig& config,
                      const EpochHook& on_epoch = {}, const TraceSink& on_iteration = {});

// Adam + BCE on fixed targets, visiting batches in the same order as train_meta.
Classifier train_baseline(const Classifier& init, const LabeledDataset& train, const LabelChoice& choice,
                          const MetaConfig& config, const EpochHook& on_epoch = {});

// Classifier checkpoint followed by the attention parameters.
void save_checkpoint(std::ostream& out, const Classifier& model, const AttentionParams& attn);
std::pair<Classifier, AttentionParams> load_checkpoint(std::istream& in, AttentionArchitecture arch,
                                                       std::size_t n_sets);

}  // namespace aol
