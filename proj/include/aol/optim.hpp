#pragma once

#include <cstdint>
#include <vector>

#include "aol/tensor.hpp"

namespace aol {

/// theta - lr * g for each pair. Returns fresh tensors that keep the
/// requires_grad flag of their inputs; the inputs are left untouched.
std::vector<Tensor> sgd_step(const std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                             double lr);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  explicit AdamState(double learning_rate = 1e-3) : lr(learning_rate) {}
};

// Bias-corrected Adam. Moment buffers are created on the first step.
std::vector<Tensor> adam_step(AdamState& state, const std::vector<Tensor>& params,
                              const std::vector<Tensor>& grads);

}  // namespace aol
