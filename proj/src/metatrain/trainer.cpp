#include <cmath>
#include <stdexcept>

#include "aol/metatrain.hpp"
#include "aol/ops.hpp"

namespace aol {

namespace {

double update_norm(const std::vector<Tensor>& before, const std::vector<Tensor>& after) {
  double total = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    auto a = before[i].data();
    auto b = after[i].data();
    for (std::size_t j = 0; j < a.size(); ++j) total += (b[j] - a[j]) * (b[j] - a[j]);
  }
  return std::sqrt(total);
}

void require_finite_loss(const Tensor& loss, const char* what) {
  if (!std::isfinite(loss.item())) {
    throw NumericError(std::string(what) + ": non-finite loss " + std::to_string(loss.item()));
  }
}

std::string batch_context(std::size_t epoch, std::size_t index, const Batch& batch) {
  return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(index) + " (first sample " +
         std::to_string(batch.indices.empty() ? 0 : batch.indices.front()) + ")";
}

}  // namespace

void MetaConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (attn_lr && !(*attn_lr > 0.0)) throw std::invalid_argument("attn_lr must be > 0");
  if (!(k > 0.0)) throw std::invalid_argument("k must be > 0");
  if (!(t_threshold > 0.0 && t_threshold < 1.0)) throw std::invalid_argument("t_threshold must lie in (0, 1)");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
}

Prediction predict(const Classifier& model, const Batch& batch) {
  Prediction pred;
  pred.params = trainable_copy(model.params());
  pred.out = forward_with(model, pred.params, batch.x, batch.aux);
  return pred;
}

Classifier meta_step(const Classifier& model, const Prediction& pred, const Tensor& y_m, double alpha) {
  if (alpha == 0.0) return model;
  Tensor loss = bce_loss(pred.out.probs, y_m);
  require_finite_loss(loss, "meta step");
  auto grads = grad(loss, pred.params);
  return model.with_params(sgd_step(model.params(), grads, alpha));
}

Tensor collect_feedback(const std::vector<Classifier>& meta_models, const Tensor& x,
                        const std::optional<Tensor>& aux) {
  if (meta_models.empty()) throw std::invalid_argument("collect_feedback: no meta models");
  std::vector<Tensor> features;
  features.reserve(meta_models.size());
  for (const auto& m : meta_models) {
    if (m.feature_dim() != meta_models.front().feature_dim()) {
      throw ShapeError("collect_feedback: meta models disagree on feature width");
    }
    features.push_back(m.forward(x, aux).features.detach());
  }
  return concat(features, 1).detach();
}

Classifier final_step(const Classifier& model, const Prediction& pred, const Tensor& y_tilde,
                      AdamState& adam) {
  Tensor loss = bce_loss(pred.out.probs, y_tilde.detach());
  require_finite_loss(loss, "final step");
  auto grads = grad(loss, pred.params);
  return model.with_params(adam_step(adam, model.params(), grads));
}

IterationResult train_iteration(const Classifier& model, const AttentionParams& attn, AdamState& adam,
                                const Batch& batch, const MetaConfig& config, bool with_post_loss) {
  const std::size_t m_sets = batch.label_sets.size();
  if (m_sets != attn.n_sets) {
    throw ShapeError("batch carries " + std::to_string(m_sets) + " label sets, attention expects " +
                     std::to_string(attn.n_sets));
  }
  // One prediction per iteration, reused by every step below.
  Prediction pred = predict(model, batch);

  std::vector<Classifier> meta_models;
  meta_models.reserve(m_sets);
  for (const auto& y_m : batch.label_sets) meta_models.push_back(meta_step(model, pred, y_m, config.alpha));

  Tensor stacked = collect_feedback(meta_models, batch.x, batch.aux);
  Tensor weights = attend(attn, stacked);
  Tensor y_tilde = binarize(sample_label(weights, batch.label_sets), config.k, config.t_threshold);

  IterationResult result{final_step(model, pred, y_tilde, adam), attn, {}};
  auto update = attention_step(attn, batch.label_sets, stacked, pred.out.probs, config);
  result.attention = update.params;

  auto& trace = result.trace;
  trace.weights = weights.to_vector();
  trace.weights_mean.assign(m_sets, 0.0);
  const std::size_t b = batch.size();
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t m = 0; m < m_sets; ++m) trace.weights_mean[m] += trace.weights[s * m_sets + m] / b;
  }
  trace.loss_pre = update.loss;
  trace.model_update_norm = update_norm(model.params(), result.model.params());
  trace.attention_update_norm =
      update_norm({attn.weight, attn.bias}, {result.attention.weight, result.attention.bias});
  if (with_post_loss) {
    trace.loss_post = bce_loss(result.model.forward(batch.x, batch.aux).probs, y_tilde.detach()).item();
  }
  return result;
}

Tensor baseline_targets(const Batch& batch, const LabelChoice& choice) {
  if (const auto* index = std::get_if<std::size_t>(&choice)) {
    if (*index >= batch.label_sets.size()) {
      throw std::out_of_range("baseline label set " + std::to_string(*index) + " does not exist");
    }
    return batch.label_sets[*index];
  }
  if (batch.label_sets.empty()) throw std::invalid_argument("averaged baseline needs at least one label set");
  Tensor total = batch.label_sets.front();
  for (std::size_t m = 1; m < batch.label_sets.size(); ++m) total = add(total, batch.label_sets[m]);
  return scalar_mul(total, 1.0 / static_cast<double>(batch.label_sets.size()));
}

MetaResult train_meta(const Classifier& init, const LabeledDataset& train, const MetaConfig& config,
                      const EpochHook& on_epoch, const TraceSink& on_iteration) {
  config.validate();
  if (train.n_label_sets() == 0) throw std::invalid_argument("meta-training needs at least one label set");
  MetaResult state{init, AttentionParams::zeros(config.attention, train.n_label_sets(), init.feature_dim())};
  AdamState adam(config.beta);
  std::uint64_t iter = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto batches = minibatches(train, config.batch_size, config.seed, epoch);
    EpochSummary summary{epoch, 0.0, std::vector<double>(train.n_label_sets(), 0.0)};
    for (std::size_t i = 0; i < batches.size(); ++i) {
      IterationResult step;
      try {
        step = train_iteration(state.model, state.attention, adam, batches[i], config,
                               static_cast<bool>(on_iteration));
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at " + batch_context(epoch, i, batches[i]));
      }
      step.trace.iter = iter++;
      state.model = std::move(step.model);
      state.attention = std::move(step.attention);
      summary.train_loss += step.trace.loss_pre / static_cast<double>(batches.size());
      for (std::size_t m = 0; m < summary.attention_mean.size(); ++m) {
        summary.attention_mean[m] += step.trace.weights_mean[m] / static_cast<double>(batches.size());
      }
      if (on_iteration) on_iteration(step.trace);
    }
    if (on_epoch) on_epoch(summary, state.model);
  }
  return state;
}

Classifier train_baseline(const Classifier& init, const LabeledDataset& train, const LabelChoice& choice,
                          const MetaConfig& config, const EpochHook& on_epoch) {
  config.validate();
  Classifier model = init;
  AdamState adam(config.beta);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto batches = minibatches(train, config.batch_size, config.seed, epoch);
    EpochSummary summary{epoch, 0.0, {}};
    for (std::size_t i = 0; i < batches.size(); ++i) {
      Prediction pred = predict(model, batches[i]);
      Tensor loss = bce_loss(pred.out.probs, baseline_targets(batches[i], choice));
      if (!std::isfinite(loss.item())) {
        throw NumericError("baseline: non-finite loss at " + batch_context(epoch, i, batches[i]));
      }
      model = model.with_params(adam_step(adam, model.params(), grad(loss, pred.params)));
      summary.train_loss += loss.item() / static_cast<double>(batches.size());
    }
    if (on_epoch) on_epoch(summary, model);
  }
  return model;
}

}  // namespace aol
