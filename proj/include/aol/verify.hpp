#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aol/metatrain.hpp"

namespace aol {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Weighted-label loss against the weighted sum of losses over random
// (pred, label sets, weights) instances with 2 <= M <= 8, 2 <= N <= 20.
CheckResult check_mixed_label_loss(std::size_t trials, std::uint64_t seed, double tolerance = 1e-10);

// Every diffcore op against central finite differences.
std::vector<CheckResult> check_op_gradients(std::size_t trials, std::uint64_t seed);

// Attention-parameter gradient of attention_step against finite differences
// and against the closed-form chain product.
CheckResult check_attention_gradients(std::size_t trials, std::uint64_t seed, double chain_tolerance = 1e-8);

/// Closed-form gradient of BCE(pred, sigmoid(k (sum_m w_m y_m - T))) with
/// w = softmax(attention logits) with respect to the attention parameters.
struct AttentionGradient {
  std::vector<double> weight;
  std::vector<double> bias;
};
AttentionGradient attention_chain_gradient(const AttentionParams& attn, const std::vector<Tensor>& label_sets,
                                           const Tensor& stacked_features, const Tensor& pred_probs,
                                           double k, double t);

std::vector<CheckResult> run_verification(std::size_t trials, std::uint64_t seed = 0);

}  // namespace aol
